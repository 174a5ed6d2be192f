#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hexquant/continuum_energy.hpp"
#include "hexquant/deformation.hpp"
#include "hexquant/discrete_energy.hpp"
#include "hexquant/errors.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/lattice.hpp"
#include "hexquant/rng.hpp"
#include "hexquant/voronoi.hpp"

namespace hexquant {

// ---------------------------------------------------------------------------
// Flow traces and decay diagnostics
// ---------------------------------------------------------------------------

struct FlowRecord {
    double time = 0.0;
    double energy = 0.0;
    double l2 = 0.0;    // L^2 distance to the equilibrium (identity / lattice)
    double linf = 0.0;  // sup distance
    double dt = 0.0;
    bool accepted = true;
};

struct FlowTrace {
    std::vector<FlowRecord> records;
    bool converged_plateau = false; // stopped because energy hit the roundoff floor

    std::vector<FlowRecord> accepted() const {
        std::vector<FlowRecord> out;
        for (const FlowRecord& r : records)
            if (r.accepted) out.push_back(r);
        return out;
    }
};

/// Poincare-Wirtinger constant of the torus R^2/L: the best C with
/// ||Y||_{L^2}^2 <= C ||grad Y||_{L^2}^2 for mean-zero periodic fields.
/// The lowest nonzero dual mode has |B^{-T} k|^2 = 4/3.
inline double poincare_constant() { return 3.0 / (16.0 * M_PI * M_PI); }

struct DecayReport {
    bool at_equilibrium = false;
    double fitted_rate = 0.0; // mu with ||X - id||_{L^2} ~ e^{-mu t}
    double r_squared = 0.0;
    std::size_t fit_points = 0;
    bool monotone_ok = true;
    double bound_as_printed = 0.0; // C_P lambda / 4 (norm rate read off the printed decay)
    double bound_corrected = 0.0;  // lambda / (4 C_P) (norm rate from the reordered chain)
    double c_p = 0.0;
    double lambda = 0.0;
    bool pass = false;

    std::string summary() const {
        std::ostringstream os;
        if (at_equilibrium) return "at equilibrium: decay rate undefined";
        os << "fitted rate " << fitted_rate << " (R^2 " << r_squared << ", " << fit_points
           << " pts), bounds: printed " << bound_as_printed << ", corrected " << bound_corrected
           << ", monotone " << (monotone_ok ? "yes" : "NO");
        return os.str();
    }
};

/// Fits the exponential decay of the L^2 distance on the final half of the
/// accepted steps and reports both readings of the decay-constant chain (the
/// printed inequality is ambiguous about which side the Poincare constant
/// sits on, so neither is asserted).
inline DecayReport decay_report(const FlowTrace& trace,
                                const ConvexifiedEnergy& ce = ConvexifiedEnergy{}) {
    const auto acc = trace.accepted();
    if (acc.size() < 10) throw geometry_error("decay_report: needs at least 10 accepted steps");

    DecayReport rep;
    rep.c_p = poincare_constant();
    rep.lambda = ce.lambda;
    rep.bound_as_printed = rep.c_p * rep.lambda / 4.0;
    rep.bound_corrected = rep.lambda / (4.0 * rep.c_p);

    for (std::size_t i = 1; i < acc.size(); ++i) {
        if (acc[i].energy > acc[i - 1].energy) rep.monotone_ok = false;
    }
    if (acc.front().l2 < 1e-13) {
        rep.at_equilibrium = true;
        rep.pass = rep.monotone_ok;
        return rep;
    }
    std::vector<double> ts, ys;
    for (std::size_t i = acc.size() / 2; i < acc.size(); ++i) {
        if (acc[i].l2 > 0.0) {
            ts.push_back(acc[i].time);
            ys.push_back(std::log(acc[i].l2));
        }
    }
    if (ts.size() < 5) throw geometry_error("decay_report: too few positive-distance points");
    const LineFit fit = fit_line(ts, ys);
    rep.fitted_rate = -fit.slope;
    rep.r_squared = fit.r_squared;
    rep.fit_points = ts.size();
    rep.pass = rep.monotone_ok && rep.fitted_rate > 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Particle flow (gradient flow of Q_{N,2})
// ---------------------------------------------------------------------------

struct ParticleState {
    HexLattice lattice{1};
    std::vector<Vec2> points; // canonical torus representatives in node order
    double time = 0.0;
};

/// Deviation of a configuration from the best-fit translated lattice.
struct LatticeDeviation {
    Vec2 translation{0.0, 0.0};
    double max_deviation = 0.0;
    double rms_deviation = 0.0;
};

inline LatticeDeviation lattice_deviation(const ParticleState& state) {
    const int n = state.lattice.n;
    std::vector<Vec2> d;
    d.reserve(state.points.size());
    for (int k1 = 0; k1 < n; ++k1) {
        for (int k2 = 0; k2 < n; ++k2) {
            const Vec2 node = state.lattice.from_lattice({double(k1) / n, double(k2) / n});
            d.push_back(state.lattice.torus_delta(state.points[std::size_t(k1) * n + k2], node));
        }
    }
    LatticeDeviation dev;
    for (const Vec2& v : d) dev.translation += v;
    dev.translation = dev.translation / double(d.size());
    double sum2 = 0.0;
    for (const Vec2& v : d) {
        const double r = (v - dev.translation).norm();
        dev.max_deviation = std::max(dev.max_deviation, r);
        sum2 += r * r;
    }
    dev.rms_deviation = std::sqrt(sum2 / double(d.size()));
    return dev;
}

struct ParticleForces {
    std::vector<Vec2> force; // -grad Q per site
    double energy = 0.0;     // Q of the configuration
};

/// Lloyd-type force of the uniform-density quantization functional:
/// -grad_{x_i} Q = -2 area(V_i) (x_i - centroid(V_i)). Boundary terms vanish
/// because dist^2 is continuous across cell boundaries.
inline ParticleForces particle_rhs(const ParticleState& state,
                                   VoronoiMode mode = VoronoiMode::hexagon) {
    const VoronoiDiagram dia = voronoi_periodic(state.points, state.lattice, mode);
    ParticleForces out;
    out.force.resize(dia.sites.size());
    for (std::size_t i = 0; i < dia.sites.size(); ++i) {
        const double a = dia.cells[i].area();
        out.force[i] = -2.0 * a * (dia.sites[i] - dia.cells[i].centroid());
        out.energy += cell_energy(dia, i);
    }
    return out;
}

namespace detail {

inline std::vector<Vec2> advanced_points(const ParticleState& state,
                                         const std::vector<Vec2>& force, double dt) {
    std::vector<Vec2> next(state.points.size());
    for (std::size_t i = 0; i < next.size(); ++i)
        next[i] = state.lattice.wrap(state.points[i] + dt * force[i]);
    return next;
}

inline void compare_against_general_mode(const ParticleState& state) {
    const VoronoiDiagram hex = voronoi_periodic(state.points, state.lattice, VoronoiMode::hexagon);
    const VoronoiDiagram gen = voronoi_periodic(state.points, state.lattice, VoronoiMode::general);
    for (std::size_t i = 0; i < hex.cells.size(); ++i) {
        if (hex.cells[i].size() != gen.cells[i].size())
            throw mode_violation_error("particle flow: hexagon/general cell topology diverged");
        // same cyclic vertex set up to starting index
        const auto& hv = hex.cells[i].vertices;
        const auto& gv = gen.cells[i].vertices;
        const Vec2 site_h = hex.sites[i];
        const Vec2 site_g = gen.sites[i];
        for (const Vec2& v : hv) {
            double best = 1e300;
            for (const Vec2& w : gv) best = std::min(best, ((v - site_h) - (w - site_g)).norm());
            if (best > 1e-9)
                throw mode_violation_error("particle flow: hexagon/general cell vertices diverged");
        }
    }
}

} // namespace detail

/// One explicit Euler step with energy backtracking: dt is halved until Q
/// strictly decreases; the accepted dt is returned through `dt`, positions
/// are wrapped back to the torus. Throws stagnation_error when dt underflows
/// away from the energy floor.
inline ParticleState particle_step(const ParticleState& state, double& dt,
                                   const ParticleForces* precomputed = nullptr) {
    if (!(dt > 0.0)) throw geometry_error("particle_step: dt must be positive");
    const ParticleForces forces = precomputed ? *precomputed : particle_rhs(state);
    double force2 = 0.0;
    for (const Vec2& f : forces.force) force2 += f.norm2();

    while (true) {
        ParticleState next{state.lattice, detail::advanced_points(state, forces.force, dt),
                           state.time + dt};
        bool decreased = false;
        try {
            decreased = particle_rhs(next).energy < forces.energy;
        } catch (const geometry_error&) {
            // overshoot left the hexagonal regime: reject the trial
        }
        if (decreased) return next;
        dt *= 0.5;
        if (dt < 1e-12) {
            // discriminate a genuine stall from the roundoff floor of Q
            const double predicted = dt * force2;
            if (predicted > 64.0 * std::numeric_limits<double>::epsilon() * forces.energy)
                throw stagnation_error("particle_step: time step underflow");
            return state; // at the floor: caller observes unchanged time
        }
    }
}

struct ParticleFlowOptions {
    double t_final = 1.0;
    std::size_t max_steps = 100000;
    double dt_init = 0.0;            // 0: 1/(4 sqrt3 eps^2), a quarter Lloyd step
    double target_deviation = 0.0;   // stop early when max deviation falls below
    int general_check_interval = 50; // cross-check hexagon mode every k steps
};

struct ParticleFlowResult {
    ParticleState state;
    FlowTrace trace;
};

inline ParticleFlowResult run_particle_flow(const ParticleState& initial,
                                            const ParticleFlowOptions& opts = {}) {
    ParticleFlowResult out;
    out.state = initial;
    const double eps = initial.lattice.epsilon;
    double dt = opts.dt_init > 0.0 ? opts.dt_init : 0.25 / (std::sqrt(3.0) * eps * eps);

    auto record = [&](const ParticleState& s, double energy, double dt_used, bool accepted) {
        const LatticeDeviation dev = lattice_deviation(s);
        out.trace.records.push_back(
            {s.time, energy, dev.rms_deviation, dev.max_deviation, dt_used, accepted});
    };
    record(out.state, particle_rhs(out.state).energy, 0.0, true);

    for (std::size_t step = 0; step < opts.max_steps; ++step) {
        if (out.state.time >= opts.t_final) break;
        const ParticleForces forces = particle_rhs(out.state);
        const double t_before = out.state.time;
        ParticleState next = particle_step(out.state, dt, &forces);
        if (next.time == t_before) { // energy floor reached
            out.trace.converged_plateau = true;
            break;
        }
        out.state = std::move(next);
        const double q = particle_rhs(out.state).energy;
        record(out.state, q, dt, true);
        dt *= 1.2;
        if (opts.general_check_interval > 0 && (step + 1) % opts.general_check_interval == 0)
            detail::compare_against_general_mode(out.state);
        if (opts.target_deviation > 0.0 &&
            lattice_deviation(out.state).max_deviation <= opts.target_deviation)
            break;
    }
    return out;
}

/// Lattice nodes displaced by independent uniform-in-disk jitters of the
/// given radius (seeded): the Figure-style initial data.
inline ParticleState jittered_lattice(const HexLattice& lattice, double jitter_radius,
                                      std::uint64_t seed) {
    Rng rng(seed);
    ParticleState st{lattice, {}, 0.0};
    st.points.reserve(std::size_t(lattice.n) * lattice.n);
    for (const Vec2& u : lattice.node_lattice_coords()) {
        st.points.push_back(lattice.wrap(lattice.from_lattice(u) + rng.in_disk(jitter_radius)));
    }
    return st;
}

// ---------------------------------------------------------------------------
// PDE flow (gradient flow of the continuum functional)
// ---------------------------------------------------------------------------

enum class PdeVariant { F, F0, G };

/// Grid state of the periodic PDE in lattice coordinates. The solver works on
/// the raw m x m samples with centered differences; the DeformationField
/// interpolant is only rebuilt for observers.
struct PdeState {
    int m = 0;
    std::vector<Vec2> y; // displacement samples, row-major
    double time = 0.0;

    static PdeState from_field(const DeformationField& field, int m) {
        PdeState st;
        st.m = m;
        const Mat2 B = hex_basis();
        st.y.reserve(std::size_t(m) * m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                st.y.push_back(field.displacement(B * Vec2{double(i) / m - 0.5, double(j) / m - 0.5}));
        return st;
    }

    DeformationField to_field(double eta = 0.0) const {
        return DeformationField::grid(m, y, eta);
    }

    Vec2 mean() const {
        Vec2 c{0.0, 0.0};
        for (const Vec2& v : y) c += v;
        return c / double(y.size());
    }

    double l2() const {
        double acc = 0.0;
        for (const Vec2& v : y) acc += v.norm2();
        return std::sqrt(acc / double(y.size()) * area_pi());
    }

    double linf() const {
        double acc = 0.0;
        for (const Vec2& v : y) acc = std::max(acc, v.norm());
        return acc;
    }
};

namespace detail {

/// Centered-difference node gradients dY/du on the periodic grid.
inline std::vector<Mat2> centered_node_gradients(const PdeState& st) {
    const int m = st.m;
    std::vector<Mat2> g(st.y.size());
    const double scale = double(m) / 2.0; // 1/(2h), h = 1/m
    for (int i = 0; i < m; ++i) {
        const int ip = (i + 1) % m, im = (i + m - 1) % m;
        for (int j = 0; j < m; ++j) {
            const int jp = (j + 1) % m, jm = (j + m - 1) % m;
            const Vec2 d1 = (st.y[std::size_t(ip) * m + j] - st.y[std::size_t(im) * m + j]) * scale;
            const Vec2 d2 = (st.y[std::size_t(i) * m + jp] - st.y[std::size_t(i) * m + jm]) * scale;
            g[std::size_t(i) * m + j] = Mat2{d1.x1, d2.x1, d1.x2, d2.x2};
        }
    }
    return g;
}

struct PdeDensity {
    double energy = 0.0;
    std::vector<Mat2> grad; // dDensity/dM per node
};

inline PdeDensity evaluate_density(const PdeState& st, PdeVariant variant,
                                   const ConvexifiedG& g_density, bool need_grad) {
    const auto grads = centered_node_gradients(st);
    const Mat2 Binv = hex_basis_inverse();
    PdeDensity out;
    if (need_grad) out.grad.resize(grads.size());
    int bad_count = 0;
    std::string bad;
    for (std::size_t idx = 0; idx < grads.size(); ++idx) {
        const Mat2 M = Mat2::identity() + grads[idx] * Binv;
        try {
            switch (variant) {
                case PdeVariant::F:
                    out.energy += energy_density(M);
                    if (need_grad) out.grad[idx] = grad_F(M);
                    break;
                case PdeVariant::F0:
                    out.energy += F0(M);
                    if (need_grad) out.grad[idx] = grad_F0(M);
                    break;
                case PdeVariant::G:
                    out.energy += g_density.value(M);
                    if (need_grad) out.grad[idx] = g_density.gradient(M);
                    break;
            }
        } catch (const regime_error&) {
            if (++bad_count <= 4) {
                const int m = st.m;
                bad += " node(" + std::to_string(idx / m) + "," + std::to_string(idx % m) + ")";
            }
        }
    }
    if (bad_count > 0)
        throw regime_error("pde flow: " + std::to_string(bad_count) +
                           " nodes outside the regime:" + bad);
    out.energy *= area_pi() / double(grads.size());
    return out;
}

} // namespace detail

/// Right-hand side div(grad Density(nabla X)) of the gradient flow, i.e. the
/// negative of the discrete variational gradient. Centered differences for
/// the forward operator and their exact adjoint for the divergence make this
/// the exact negative gradient of the discrete energy.
inline GridVectorField pde_rhs(const PdeState& state, PdeVariant variant = PdeVariant::F,
                               const ConvexifiedG& g_density = ConvexifiedG{}) {
    const auto density = detail::evaluate_density(state, variant, g_density, true);
    const Mat2 Binv = hex_basis_inverse();
    const int m = state.m;
    const double scale = double(m) / 2.0;

    std::vector<Mat2> H(density.grad.size());
    for (std::size_t i = 0; i < H.size(); ++i) H[i] = density.grad[i] * Binv.transpose();

    GridVectorField rhs;
    rhs.m = m;
    rhs.values.assign(std::size_t(m) * m, Vec2{0.0, 0.0});
    for (int i = 0; i < m; ++i) {
        const int ip = (i + 1) % m, im = (i + m - 1) % m;
        for (int j = 0; j < m; ++j) {
            const int jp = (j + 1) % m, jm = (j + m - 1) % m;
            const Mat2& h1p = H[std::size_t(ip) * m + j];
            const Mat2& h1m = H[std::size_t(im) * m + j];
            const Mat2& h2p = H[std::size_t(i) * m + jp];
            const Mat2& h2m = H[std::size_t(i) * m + jm];
            rhs.at(i, j) = (Vec2{h1p.a11, h1p.a21} - Vec2{h1m.a11, h1m.a21}) * scale +
                           (Vec2{h2p.a12, h2p.a22} - Vec2{h2m.a12, h2m.a22}) * scale;
        }
    }
    return rhs;
}

/// Discrete energy of the state under the chosen density.
inline double pde_energy(const PdeState& state, PdeVariant variant = PdeVariant::F,
                         const ConvexifiedG& g_density = ConvexifiedG{}) {
    return detail::evaluate_density(state, variant, g_density, false).energy;
}

/// One explicit Euler step with energy backtracking, same contract as
/// particle_step.
inline PdeState pde_step(const PdeState& state, double& dt, PdeVariant variant = PdeVariant::F,
                         const ConvexifiedG& g_density = ConvexifiedG{}) {
    if (!(dt > 0.0)) throw geometry_error("pde_step: dt must be positive");
    const double e0 = pde_energy(state, variant, g_density);
    const GridVectorField rhs = pde_rhs(state, variant, g_density);
    double rhs2 = 0.0;
    for (const Vec2& v : rhs.values) rhs2 += v.norm2();
    rhs2 = rhs2 / double(rhs.values.size()) * area_pi();

    while (true) {
        PdeState next = state;
        next.time += dt;
        for (std::size_t i = 0; i < next.y.size(); ++i) next.y[i] += dt * rhs.values[i];
        bool decreased = false;
        try {
            decreased = pde_energy(next, variant, g_density) < e0;
        } catch (const regime_error&) {
            // overshoot left the regime of the density: reject the trial
        }
        if (decreased) return next;
        dt *= 0.5;
        if (dt < 1e-12) {
            const double predicted = dt * rhs2;
            if (predicted > 64.0 * std::numeric_limits<double>::epsilon() * std::abs(e0))
                throw stagnation_error("pde_step: time step underflow");
            return state;
        }
    }
}

struct PdeFlowOptions {
    double t_final = 10.0;
    std::size_t max_steps = 200000;
    double dt_init = 0.0; // 0: h^2 / (8 Lambda)
    ConvexifiedEnergy coercivity{};
};

struct PdeFlowResult {
    PdeState state;
    FlowTrace trace;
};

inline PdeFlowResult run_pde_flow(const PdeState& initial, PdeVariant variant = PdeVariant::F,
                                  const PdeFlowOptions& opts = {}) {
    PdeFlowResult out;
    out.state = initial;
    const ConvexifiedG g_density{opts.coercivity};
    const double h = 1.0 / initial.m;
    double dt = opts.dt_init > 0.0 ? opts.dt_init : h * h / (8.0 * opts.coercivity.Lambda);

    auto record = [&](const PdeState& s, double energy, double dt_used) {
        out.trace.records.push_back({s.time, energy, s.l2(), s.linf(), dt_used, true});
    };
    record(out.state, pde_energy(out.state, variant, g_density), 0.0);

    for (std::size_t step = 0; step < opts.max_steps; ++step) {
        if (out.state.time >= opts.t_final) break;
        const double t_before = out.state.time;
        PdeState next = pde_step(out.state, dt, variant, g_density);
        if (next.time == t_before) {
            out.trace.converged_plateau = true;
            break;
        }
        out.state = std::move(next);
        record(out.state, pde_energy(out.state, variant, g_density), dt);
        dt *= 1.25;
    }
    return out;
}

/// Smallest positive eigenvalue of the discrete linearized operator at the
/// identity, built from the quadratic form of the convexified density
/// (coefficients trace^2 -> 5/(24 sqrt3), Frobenius -> 1/(16 sqrt3)). The
/// operator diagonalizes per Fourier mode with symbol r(k) = m B^{-T}
/// (sin(2 pi k1/m), sin(2 pi k2/m)); its null modes (the Nyquist checkerboards
/// annihilated by centered differences, plus constants) are excluded: they are
/// stationary for the linearized flow and absent from band-limited data.
inline double linearized_smallest_eigenvalue(int m) {
    const Mat2 Bt_inv = hex_basis_inverse().transpose();
    const double c_frob = 1.0 / (16.0 * std::sqrt(3.0));
    double best = std::numeric_limits<double>::infinity();
    for (int k1 = -m / 2; k1 < (m + 1) / 2; ++k1) {
        for (int k2 = -m / 2; k2 < (m + 1) / 2; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            const Vec2 s{std::sin(2.0 * M_PI * k1 / m), std::sin(2.0 * M_PI * k2 / m)};
            const Vec2 r = Bt_inv * s * double(m);
            const double r2 = r.norm2();
            if (r2 < 1e-20) continue; // centered-difference null mode
            best = std::min(best, 2.0 * c_frob * r2);
        }
    }
    return best;
}

} // namespace hexquant

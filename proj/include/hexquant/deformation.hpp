#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hexquant/errors.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/interp.hpp"
#include "hexquant/lattice.hpp"
#include "hexquant/rng.hpp"

namespace hexquant {

/// One Fourier mode of a lattice-periodic field in lattice coordinates:
/// cos_coef * cos(2 pi k.u) + sin_coef * sin(2 pi k.u).
struct FourierMode {
    int k1 = 0;
    int k2 = 0;
    Vec2 cos_coef{0.0, 0.0};
    Vec2 sin_coef{0.0, 0.0};
};

/// L-periodic displacement Y with X = id + Y. The internal chart is lattice
/// coordinates u in [-1/2, 1/2)^2 with x = u1 e1 + u2 e2, which makes
/// periodicity structural. Immutable after construction.
///
/// Grid fields interpolate m x m samples taken at u = (i/m, j/m) - 1/2:
/// trigonometric (spectral) interpolation for m <= 64, periodic bicubic
/// splines above. Derivatives always come from the interpolant.
class DeformationField {
  public:
    enum class Kind { fourier, grid };

    static constexpr int kSpectralLimit = 64;

    DeformationField() = default; // the identity map (X = id, Y = 0)

    static DeformationField identity() { return fourier({}, 0.0); }

    static DeformationField fourier(std::vector<FourierMode> modes, double eta) {
        DeformationField f;
        f.kind_ = Kind::fourier;
        f.modes_ = std::move(modes);
        f.eta_ = eta;
        return f;
    }

    /// `values` row-major: values[i*m + j] = Y at u = (i/m - 1/2, j/m - 1/2).
    static DeformationField grid(int m, std::vector<Vec2> values, double eta) {
        if (m < 3 || values.size() != std::size_t(m) * m)
            throw geometry_error("DeformationField::grid: bad sample count");
        DeformationField f;
        f.kind_ = Kind::grid;
        f.m_ = m;
        f.grid_values_ = std::move(values);
        f.eta_ = eta;
        f.build_interpolants();
        return f;
    }

    Kind kind() const { return kind_; }
    double eta() const { return eta_; }
    int grid_size() const { return m_; }
    const std::vector<FourierMode>& modes() const { return modes_; }
    const std::vector<Vec2>& grid_values() const { return grid_values_; }

    Vec2 grid_node_u(int i, int j) const {
        return {double(i) / m_ - 0.5, double(j) / m_ - 0.5};
    }

    /// Y in lattice coordinates (period 1 in each component of u).
    Vec2 displacement_lattice(Vec2 u) const {
        if (kind_ == Kind::fourier) {
            Vec2 y{0.0, 0.0};
            for (const FourierMode& md : modes_) {
                const double ph = 2.0 * M_PI * (md.k1 * u.x1 + md.k2 * u.x2);
                y += std::cos(ph) * md.cos_coef + std::sin(ph) * md.sin_coef;
            }
            return y;
        }
        const double v1 = u.x1 + 0.5, v2 = u.x2 + 0.5;
        if (m_ <= kSpectralLimit)
            return {trig_[0].value(v1, v2), trig_[1].value(v1, v2)};
        return {cubic_[0].value(v1, v2), cubic_[1].value(v1, v2)};
    }

    /// dY/du with column k = partial derivative along u_k.
    Mat2 displacement_grad_lattice(Vec2 u) const {
        if (kind_ == Kind::fourier) {
            Mat2 g{};
            for (const FourierMode& md : modes_) {
                const double ph = 2.0 * M_PI * (md.k1 * u.x1 + md.k2 * u.x2);
                const double c = std::cos(ph), s = std::sin(ph);
                const Vec2 dphi = {2.0 * M_PI * md.k1, 2.0 * M_PI * md.k2};
                const Vec2 amp = -s * md.cos_coef + c * md.sin_coef;
                g += Mat2{amp.x1 * dphi.x1, amp.x1 * dphi.x2,
                          amp.x2 * dphi.x1, amp.x2 * dphi.x2};
            }
            return g;
        }
        const double v1 = u.x1 + 0.5, v2 = u.x2 + 0.5;
        if (m_ <= kSpectralLimit) {
            return {trig_[0].deriv1(v1, v2), trig_[0].deriv2(v1, v2),
                    trig_[1].deriv1(v1, v2), trig_[1].deriv2(v1, v2)};
        }
        return {cubic_[0].deriv1(v1, v2), cubic_[0].deriv2(v1, v2),
                cubic_[1].deriv1(v1, v2), cubic_[1].deriv2(v1, v2)};
    }

    Vec2 displacement(Vec2 x) const {
        return displacement_lattice(hex_basis_inverse() * x);
    }

    /// X(x) = x + Y(x).
    Vec2 map(Vec2 x) const { return x + displacement(x); }

    /// nabla_x Y = (dY/du) B^{-1}.
    Mat2 gradient_displacement(Vec2 x) const {
        return displacement_grad_lattice(hex_basis_inverse() * x) * hex_basis_inverse();
    }

    /// nabla X = I + nabla Y.
    Mat2 gradient(Vec2 x) const {
        return Mat2::identity() + gradient_displacement(x);
    }

    /// Mean of Y over Pi divided by |Pi| (the average displacement).
    Vec2 mean_displacement() const {
        if (kind_ == Kind::fourier) {
            Vec2 c{0.0, 0.0};
            for (const FourierMode& md : modes_) {
                if (md.k1 == 0 && md.k2 == 0) c += md.cos_coef;
            }
            return c;
        }
        Vec2 c{0.0, 0.0};
        for (const Vec2& v : grid_values_) c += v;
        return c / double(grid_values_.size());
    }

  private:
    void build_interpolants() {
        std::vector<double> comp(std::size_t(m_) * m_);
        for (int c = 0; c < 2; ++c) {
            for (std::size_t i = 0; i < comp.size(); ++i)
                comp[i] = c == 0 ? grid_values_[i].x1 : grid_values_[i].x2;
            if (m_ <= kSpectralLimit)
                trig_[c] = TrigInterpolant2D(m_, comp);
            else
                cubic_[c] = BicubicInterpolant2D(m_, comp);
        }
    }

    Kind kind_ = Kind::fourier;
    double eta_ = 0.0;
    std::vector<FourierMode> modes_;
    int m_ = 0;
    std::vector<Vec2> grid_values_;
    TrigInterpolant2D trig_[2];
    BicubicInterpolant2D cubic_[2];
};

// ---------------------------------------------------------------------------
// Quadrature over the fundamental domain
// ---------------------------------------------------------------------------

/// Tensor-product trapezoid rule in lattice coordinates (spectrally accurate
/// for periodic integrands): |Pi| times the mean over the m x m node grid.
/// The callable receives the plane coordinate x = B u.
template <typename F>
double integrate_over_pi(F&& f, int m = 64) {
    double acc = 0.0;
    const Mat2 B = hex_basis();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const Vec2 u{double(i) / m - 0.5, double(j) / m - 0.5};
            acc += f(B * u);
        }
    }
    return acc / double(std::size_t(m) * m) * area_pi();
}

/// Quadrature of det(nabla Y) over Pi from a gradient sampler. The integrand
/// is a null Lagrangian: the integral vanishes for L-periodic C^1 fields.
template <typename G>
double det_jacobian_integral_of(G&& grad_displacement, int m = 64) {
    return integrate_over_pi([&](Vec2 x) { return grad_displacement(x).det(); }, m);
}

inline double det_jacobian_integral(const DeformationField& field, int m = 64) {
    return det_jacobian_integral_of(
        [&](Vec2 x) { return field.gradient_displacement(x); },
        field.kind() == DeformationField::Kind::grid ? std::max(m, field.grid_size()) : m);
}

// ---------------------------------------------------------------------------
// Field construction helpers
// ---------------------------------------------------------------------------

/// Shifted copy with zero mean: X - <X>. Property (c) restoration.
inline DeformationField recenter(const DeformationField& field) {
    const Vec2 mean = field.mean_displacement();
    if (field.kind() == DeformationField::Kind::fourier) {
        std::vector<FourierMode> modes;
        modes.reserve(field.modes().size());
        for (FourierMode md : field.modes()) {
            if (md.k1 == 0 && md.k2 == 0) {
                md.cos_coef -= mean;
                if (md.cos_coef.norm() == 0.0 && md.sin_coef.norm() == 0.0) continue;
            }
            modes.push_back(md);
        }
        return DeformationField::fourier(std::move(modes), field.eta());
    }
    std::vector<Vec2> values = field.grid_values();
    for (Vec2& v : values) v -= mean;
    return DeformationField::grid(field.grid_size(), std::move(values), field.eta());
}

/// The n^2 deformed nodes X(eps(k1 e1 + k2 e2)), reduced to canonical torus
/// representatives, in the row-major (k1, k2) node order of HexLattice.
inline std::vector<Vec2> sample_points(const DeformationField& field, const HexLattice& lattice) {
    std::vector<Vec2> pts;
    pts.reserve(std::size_t(lattice.n) * lattice.n);
    for (const Vec2& u : lattice.node_lattice_coords()) {
        const Vec2 x = lattice.from_lattice(u);
        pts.push_back(lattice.wrap(field.map(x)));
    }
    return pts;
}

/// Measured W^{1,inf} size of Y on a sampling grid: max over nodes of
/// max(|Y|, Frobenius norm of nabla_x Y).
inline double w1inf_norm(const DeformationField& field, int m = 128) {
    double best = 0.0;
    const Mat2 B = hex_basis();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const Vec2 x = B * Vec2{double(i) / m - 0.5, double(j) / m - 0.5};
            best = std::max(best, field.displacement(x).norm());
            best = std::max(best, field.gradient_displacement(x).frobenius_norm());
        }
    }
    return best;
}

struct PropertyReport {
    bool periodicity_ok = false;     // (a): structural for both field kinds
    bool smallness_ok = false;       // (b): ||X - id||_{W^{1,inf}} < eta_max
    bool mean_zero_ok = false;       // (c): centered at the origin
    bool jacobian_positive = false;  // det(nabla X) > 0 everywhere sampled
    double w1inf = 0.0;
    double mean_norm = 0.0;
    double min_det = 0.0;

    bool pass() const {
        return periodicity_ok && smallness_ok && mean_zero_ok && jacobian_positive;
    }

    std::string summary() const {
        std::ostringstream os;
        os << "(a) periodicity: " << (periodicity_ok ? "pass" : "FAIL")
           << "; (b) W1inf=" << w1inf << ": " << (smallness_ok ? "pass" : "FAIL")
           << "; (c) |mean|=" << mean_norm << ": " << (mean_zero_ok ? "pass" : "FAIL")
           << "; det>0 (min " << min_det << "): " << (jacobian_positive ? "pass" : "FAIL");
        return os.str();
    }
};

/// Checks properties (a)-(c) of the deformation X = id + Y plus positivity of
/// det(nabla X), sampling on an m x m grid.
inline PropertyReport validate_properties(const DeformationField& field, double eta_max = 0.05,
                                          int m = 128, double mean_tol = 1e-10) {
    PropertyReport rep;
    rep.periodicity_ok = true; // both kinds are periodic by construction in u
    rep.w1inf = w1inf_norm(field, m);
    rep.smallness_ok = rep.w1inf < eta_max;
    rep.mean_norm = field.mean_displacement().norm();
    rep.mean_zero_ok = rep.mean_norm <= mean_tol;
    const Mat2 B = hex_basis();
    rep.min_det = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const Vec2 x = B * Vec2{double(i) / m - 0.5, double(j) / m - 0.5};
            rep.min_det = std::min(rep.min_det, field.gradient(x).det());
        }
    }
    rep.jacobian_positive = rep.min_det > 0.0;
    return rep;
}

/// Seeded band-limited random field: Gaussian Fourier coefficients on modes
/// with max(|k1|,|k2|) <= band (one representative per +-k pair), recentered,
/// then rescaled so the measured W^{1,inf} norm equals eta. Smooth and
/// admissible by construction at desk scale.
inline DeformationField random_band_limited_field(double eta, std::uint64_t seed, int band = 3) {
    Rng rng(seed);
    std::vector<FourierMode> modes;
    for (int k1 = -band; k1 <= band; ++k1) {
        for (int k2 = -band; k2 <= band; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            if (k1 < 0 || (k1 == 0 && k2 < 0)) continue; // one of each +-k pair
            const double decay = std::exp(-(k1 * k1 + k2 * k2) / 4.0);
            FourierMode md;
            md.k1 = k1;
            md.k2 = k2;
            md.cos_coef = {decay * rng.normal(), decay * rng.normal()};
            md.sin_coef = {decay * rng.normal(), decay * rng.normal()};
            modes.push_back(md);
        }
    }
    DeformationField raw = recenter(DeformationField::fourier(std::move(modes), eta));
    const double norm = w1inf_norm(raw, 96);
    if (norm == 0.0) return DeformationField::identity();
    const double scale = eta / norm;
    std::vector<FourierMode> scaled = raw.modes();
    for (FourierMode& md : scaled) {
        md.cos_coef *= scale;
        md.sin_coef *= scale;
    }
    return DeformationField::fourier(std::move(scaled), eta);
}

/// a + s * b for fields of matching kind (mode lists are merged for Fourier
/// fields, samples added for grid fields of equal resolution).
inline DeformationField add_scaled(const DeformationField& a, const DeformationField& b,
                                   double s) {
    if (a.kind() != b.kind())
        throw geometry_error("add_scaled: mixed field kinds");
    if (a.kind() == DeformationField::Kind::fourier) {
        std::vector<FourierMode> modes = a.modes();
        for (FourierMode md : b.modes()) {
            bool merged = false;
            for (FourierMode& ex : modes) {
                if (ex.k1 == md.k1 && ex.k2 == md.k2) {
                    ex.cos_coef += s * md.cos_coef;
                    ex.sin_coef += s * md.sin_coef;
                    merged = true;
                    break;
                }
            }
            if (!merged) {
                md.cos_coef *= s;
                md.sin_coef *= s;
                modes.push_back(md);
            }
        }
        return DeformationField::fourier(std::move(modes), a.eta() + std::abs(s) * b.eta());
    }
    if (a.grid_size() != b.grid_size())
        throw geometry_error("add_scaled: grid resolutions differ");
    std::vector<Vec2> values = a.grid_values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += s * b.grid_values()[i];
    return DeformationField::grid(a.grid_size(), std::move(values), a.eta() + std::abs(s) * b.eta());
}

/// Samples any field onto an m x m grid field (used to seed PDE flows and to
/// build matched discretizations for gradient checks).
inline DeformationField to_grid_field(const DeformationField& field, int m) {
    std::vector<Vec2> values;
    values.reserve(std::size_t(m) * m);
    const Mat2 B = hex_basis();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            values.push_back(field.displacement(B * Vec2{double(i) / m - 0.5, double(j) / m - 0.5}));
        }
    }
    return DeformationField::grid(m, std::move(values), field.eta());
}

} // namespace hexquant

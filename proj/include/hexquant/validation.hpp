#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hexquant/continuum_energy.hpp"
#include "hexquant/deformation.hpp"
#include "hexquant/discrete_energy.hpp"
#include "hexquant/flows.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/lattice.hpp"
#include "hexquant/numeric.hpp"
#include "hexquant/oracles.hpp"
#include "hexquant/rng.hpp"
#include "hexquant/voronoi.hpp"

namespace hexquant {
namespace validation {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Options {
    double tol_scale = 1.0;     // multiplies every tolerance (CLI override)
    std::uint64_t seed = 20260811;
    bool mutate_p_sign = false; // test hook: flips one term of P to prove the
                                // battery catches a defective polynomial
};

namespace detail {

inline bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

/// Uniform direction in matrix space, radius scaled into the Frobenius ball
/// ||M - I||_2 <= radius.
inline Mat2 random_near_identity(Rng& rng, double radius) {
    Mat2 U{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double nn = U.frobenius_norm();
    if (nn == 0.0) return Mat2::identity();
    return Mat2::identity() + U * (radius * rng.uniform() / nn);
}

inline double polynomial_P_maybe_mutated(double a, double b, double c, double d, bool mutate) {
    double p = polynomial_P(a, b, c, d);
    if (mutate) p += 2.0 * 12.0 * a * a * a * a * d * d; // flips the +12 a^4 d^2 term
    return p;
}

} // namespace detail

using Check = std::function<CheckResult(const Options&)>;

/// The full property battery: every closed form checked against its
/// independent oracle, every invariant exercised at least once. Names are
/// stable so failures can be scripted against.
inline std::vector<std::pair<std::string, Check>> checks() {
    using detail::close;
    using detail::num;
    std::vector<std::pair<std::string, Check>> list;
    auto add = [&](const std::string& name, std::function<bool(const Options&, std::string&)> fn) {
        list.emplace_back(name, [name, fn](const Options& o) {
            CheckResult r;
            r.name = name;
            try {
                r.pass = fn(o, r.detail);
            } catch (const std::exception& e) {
                r.pass = false;
                r.detail = std::string("exception: ") + e.what();
            }
            return r;
        });
    };

    // ---- core geometry -----------------------------------------------------
    add("rotation-pi3-basis", [](const Options& o, std::string& d) {
        const Mat2 R = rotation_pi_3();
        const Vec2 re1 = R * hex_e1();
        const Vec2 rte1 = R.transpose() * hex_e1();
        d = "R e1 = (" + num(re1.x1) + "," + num(re1.x2) + ")";
        return (re1 - hex_e2()).norm() < 1e-15 * o.tol_scale + 1e-15 &&
               (rte1 - hex_e12()).norm() < 2e-15 &&
               std::abs((R.transpose() * R - Mat2::identity()).frobenius_norm()) < 1e-15 &&
               std::abs(R.det() - 1.0) < 1e-15;
    });

    add("right-triangle-moment-vs-quadrature", [](const Options& o, std::string& d) {
        // legs h along x1 from the origin, l perpendicular at the far end
        bool ok = true;
        for (auto [h, l] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {0.7, 1.9}}) {
            const double closed = right_triangle_moment(h, l);
            const double quad = oracles::triangle_quadrature(
                [](Vec2 y) { return y.norm2(); }, Vec2{0, 0}, Vec2{h, 0}, Vec2{h, l});
            ok = ok && close(closed, quad, 1e-13 * o.tol_scale);
            d += "(h=" + num(h) + ",l=" + num(l) + "): " + num(closed) + " vs " + num(quad) + "; ";
        }
        ok = ok && close(right_triangle_moment(2.0, 1.0), 13.0 / 6.0, 1e-15 * o.tol_scale);
        return ok;
    });

    add("hexagon-second-moment-oracle", [](const Options& o, std::string& d) {
        const double a = 0.37;
        const ConvexPolygon hexa = regular_hexagon({0.3, -0.2}, a);
        const double closed = polygon_second_moment(hexa, hexa.centroid());
        const double quad = oracles::polygon_second_moment_quadrature(hexa, hexa.centroid());
        const double reference = 5.0 * std::sqrt(3.0) / 8.0 * a * a * a * a;
        d = num(closed) + " vs quadrature " + num(quad) + " vs (5 sqrt3/8) a^4 " + num(reference);
        return close(closed, quad, 1e-13 * o.tol_scale) &&
               close(closed, reference, 1e-13 * o.tol_scale);
    });

    add("polygon-moment-12-right-triangles", [](const Options& o, std::string& d) {
        // assembling the 12 triangles of a regular hexagon reproduces the fan result
        const double a = 0.81;
        const ConvexPolygon hexa = regular_hexagon({0, 0}, a, 0.3);
        const double fan = polygon_second_moment(hexa, {0, 0});
        double twelve = 0.0;
        for (int k = 0; k < 6; ++k) {
            const Vec2 v1 = hexa.vertices[k];
            const Vec2 v2 = hexa.vertices[(k + 1) % 6];
            const Vec2 mid = 0.5 * (v1 + v2);
            const double h = mid.norm();
            twelve += right_triangle_moment(h, (v1 - mid).norm());
            twelve += right_triangle_moment(h, (v2 - mid).norm());
        }
        d = "fan " + num(fan) + " vs 12 triangles " + num(twelve);
        return close(fan, twelve, 1e-14 * o.tol_scale);
    });

    add("polygon-moment-shoelace-equivalence", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 1);
        for (int i = 0; i < 50; ++i) {
            const ConvexPolygon poly = oracles::random_convex_polygon(rng, {0, 0}, 1.0);
            const Vec2 c = poly.centroid() + rng.in_disk(0.1);
            if (!poly.contains(c)) continue;
            if (!close(polygon_second_moment(poly, c), polygon_second_moment_shoelace(poly, c),
                       1e-13 * o.tol_scale)) {
                d = "mismatch at sample " + std::to_string(i);
                return false;
            }
        }
        return true;
    });

    add("polygon-moment-monte-carlo", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 2);
        int worst = 0;
        for (int i = 0; i < 100; ++i) {
            const ConvexPolygon poly = oracles::random_convex_polygon(rng, {0, 0}, 1.0);
            const Vec2 c = poly.centroid();
            const double exact = polygon_second_moment(poly, c);
            const auto mc = oracles::polygon_second_moment_mc(poly, c, 20000, rng);
            if (std::abs(mc.value - exact) > 3.0 * mc.std_error) ++worst;
        }
        d = std::to_string(worst) + "/100 outside 3 sigma";
        return worst <= 3; // 3-sigma misses are ~0.3 expected; tolerate rare tails
    });

    add("clip-bisectors-reproduce-hexagon", [](const Options& o, std::string& d) {
        // the 6 perpendicular bisectors of the nearest lattice neighbors cut
        // the regular hexagonal Voronoi cell out of a large box
        ConvexPolygon poly{{{-2, -2}, {2, -2}, {2, 2}, {-2, 2}}};
        const Vec2 neighbors[6] = {hex_e1(), hex_e2(), hex_e2() - hex_e1(),
                                   -1.0 * hex_e1(), -1.0 * hex_e2(), hex_e1() - hex_e2()};
        for (const Vec2& nb : neighbors) {
            poly = clip_halfplane(poly, 0.5 * nb, nb, 0.0);
        }
        if (poly.size() != 6) {
            d = "clip produced " + std::to_string(poly.size()) + " vertices";
            return false;
        }
        const ConvexPolygon ref = regular_hexagon({0, 0}, 1.0 / std::sqrt(3.0), M_PI / 6.0);
        double worst = 0.0;
        for (const Vec2& v : poly.vertices) {
            double best = 1e300;
            for (const Vec2& w : ref.vertices) best = std::min(best, (v - w).norm());
            worst = std::max(worst, best);
        }
        d = "max vertex error " + num(worst);
        return worst < 1e-12 * o.tol_scale;
    });

    add("clip-own-edge-keeps-hexagon", [](const Options& o, std::string& d) {
        const ConvexPolygon hexa = regular_hexagon({0, 0}, 1.0);
        const Vec2 a = hexa.vertices[0], b = hexa.vertices[1];
        const Vec2 normal{(b - a).x2, -(b - a).x1}; // outward for CCW order
        const ConvexPolygon cut = clip_halfplane(hexa, a, normal, 0.0);
        if (cut.size() != 6) {
            d = "vertex count " + std::to_string(cut.size());
            return false;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            double best = 1e300;
            for (const Vec2& w : cut.vertices) best = std::min(best, (hexa.vertices[i] - w).norm());
            worst = std::max(worst, best);
        }
        d = "max vertex error " + num(worst);
        return worst < 1e-12 * o.tol_scale;
    });

    // ---- lattice / deformation ----------------------------------------------
    add("recenter-removes-constant", [](const Options& o, std::string& d) {
        DeformationField f = random_band_limited_field(0.02, o.seed + 3);
        std::vector<FourierMode> modes = f.modes();
        modes.push_back({0, 0, {0.013, -0.007}, {0, 0}});
        const DeformationField shifted = DeformationField::fourier(modes, f.eta());
        const DeformationField back = recenter(shifted);
        const double before = shifted.mean_displacement().norm();
        const double after = back.mean_displacement().norm();
        const double diff = (back.displacement({0.123, 0.071}) - f.displacement({0.123, 0.071})).norm();
        d = "mean " + num(before) + " -> " + num(after) + ", field diff " + num(diff);
        return after < 1e-14 * o.tol_scale && diff < 1e-14 * o.tol_scale;
    });

    add("sample-points-match-analytic", [](const Options& o, std::string& d) {
        const HexLattice lat(4);
        DeformationField shear = DeformationField::fourier(
            {{1, 0, {0.0, 0.0}, {0.01, 0.004}}, {0, 1, {0.006, 0.0}, {0.0, -0.008}}}, 0.05);
        const auto pts = sample_points(shear, lat);
        double worst = 0.0;
        for (int k1 = 0; k1 < 4; ++k1) {
            for (int k2 = 0; k2 < 4; ++k2) {
                const Vec2 x = lat.from_lattice({k1 / 4.0, k2 / 4.0});
                const Vec2 expected = lat.wrap(x + shear.displacement(x));
                worst = std::max(worst, lat.torus_distance(pts[std::size_t(k1) * 4 + k2], expected));
            }
        }
        d = "max node error " + num(worst);
        return worst < 1e-15 + 1e-15 * o.tol_scale;
    });

    add("field-gradient-vs-finite-differences", [](const Options& o, std::string& d) {
        const DeformationField f = random_band_limited_field(0.03, o.seed + 4);
        Rng rng(o.seed + 5);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const Vec2 x = hex_basis() * Vec2{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
            const Mat2 g = f.gradient_displacement(x);
            const double h = 1e-6;
            const Mat2 fd{
                (f.displacement(x + Vec2{h, 0}).x1 - f.displacement(x - Vec2{h, 0}).x1) / (2 * h),
                (f.displacement(x + Vec2{0, h}).x1 - f.displacement(x - Vec2{0, h}).x1) / (2 * h),
                (f.displacement(x + Vec2{h, 0}).x2 - f.displacement(x - Vec2{h, 0}).x2) / (2 * h),
                (f.displacement(x + Vec2{0, h}).x2 - f.displacement(x - Vec2{0, h}).x2) / (2 * h)};
            worst = std::max(worst, (g - fd).frobenius_norm() / std::max(1e-9, g.frobenius_norm()));
        }
        d = "max rel error " + num(worst);
        return worst < 1e-8 * o.tol_scale;
    });

    add("sinusoid-gradient-chain-rule", [](const Options& o, std::string& d) {
        // Y = delta (sin 2pi u1, sin 2pi u2): grad_x Y at u=0 is 2 pi delta B^{-1}
        const double delta = 0.003;
        const DeformationField f = DeformationField::fourier(
            {{1, 0, {0, 0}, {delta, 0.0}}, {0, 1, {0, 0}, {0.0, delta}}}, 0.05);
        const Mat2 expected = hex_basis_inverse() * (2.0 * M_PI * delta);
        const Mat2 got = f.gradient_displacement({0, 0});
        d = "error " + num((got - expected).frobenius_norm());
        return (got - expected).frobenius_norm() < 1e-12 * o.tol_scale;
    });

    add("det-jacobian-integral-periodic", [](const Options& o, std::string& d) {
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const DeformationField f = random_band_limited_field(0.03, o.seed + 10 + i);
            worst = std::max(worst, std::abs(det_jacobian_integral(f)));
        }
        d = "max |integral| " + num(worst);
        return worst < 1e-10 * o.tol_scale;
    });

    add("det-jacobian-nonperiodic-control", [](const Options& o, std::string& d) {
        // Y = x is not periodic; det grad Y = 1 integrates to |Pi|
        const double val = det_jacobian_integral_of([](Vec2) { return Mat2::identity(); });
        d = num(val) + " vs |Pi| " + num(area_pi());
        return close(val, area_pi(), 1e-12 * o.tol_scale);
    });

    add("validate-properties-detects-failures", [](const Options& o, std::string& d) {
        (void)o;
        const PropertyReport ok = validate_properties(DeformationField::identity());
        const DeformationField big = random_band_limited_field(0.5, 123);
        const PropertyReport too_big = validate_properties(big);
        // strong compression along u1 makes det(I + grad Y) negative somewhere
        const DeformationField fold = DeformationField::fourier(
            {{1, 0, {0, 0}, {0.3, 0.0}}}, 2.0);
        const PropertyReport folded = validate_properties(fold, 10.0);
        d = "id: " + ok.summary();
        return ok.pass() && !too_big.smallness_ok && !folded.jacobian_positive;
    });

    // ---- Voronoi / discrete energy ------------------------------------------
    add("voronoi-identity-regular-cells", [](const Options& o, std::string& d) {
        const HexLattice lat(4);
        const auto dia = voronoi_periodic(sample_points(DeformationField::identity(), lat), lat,
                                          VoronoiMode::hexagon);
        const double cell_ref = lat.epsilon * lat.epsilon * std::sqrt(3.0) / 2.0;
        double worst = 0.0;
        for (const auto& c : dia.cells) worst = std::max(worst, std::abs(c.area() / cell_ref - 1.0));
        const double total = dia.total_area();
        d = "cell area rel err " + num(worst) + ", total " + num(total);
        return worst < 1e-12 * o.tol_scale && close(total, area_pi(), 1e-12 * o.tol_scale);
    });

    add("voronoi-cross-mode-agreement", [](const Options& o, std::string& d) {
        const HexLattice lat(5);
        const DeformationField f = random_band_limited_field(0.03, o.seed + 20);
        const auto pts = sample_points(f, lat);
        const auto hex = voronoi_periodic(pts, lat, VoronoiMode::hexagon);
        const auto gen = voronoi_periodic(pts, lat, VoronoiMode::general);
        double worst = 0.0;
        for (std::size_t i = 0; i < hex.cells.size(); ++i) {
            if (hex.cells[i].size() != gen.cells[i].size()) {
                d = "cell " + std::to_string(i) + " sizes differ";
                return false;
            }
            for (const Vec2& v : hex.cells[i].vertices) {
                double best = 1e300;
                for (const Vec2& w : gen.cells[i].vertices)
                    best = std::min(best, ((v - hex.sites[i]) - (w - gen.sites[i])).norm());
                worst = std::max(worst, best);
            }
        }
        d = "max vertex gap " + num(worst);
        return worst < 1e-10 * o.tol_scale;
    });

    add("voronoi-two-point-degenerate", [](const Options& o, std::string& d) {
        const HexLattice lat(1);
        const std::vector<Vec2> pts = {{0.0, 0.0}, lat.from_lattice({0.5, 0.5})};
        const auto dia = voronoi_periodic(pts, lat, VoronoiMode::general);
        const double a0 = dia.cells[0].area(), a1 = dia.cells[1].area();
        d = "areas " + num(a0) + " / " + num(a1) + ", sum " + num(a0 + a1);
        return close(a0, a1, 1e-12 * o.tol_scale) && close(a0 + a1, area_pi(), 1e-10 * o.tol_scale);
    });

    add("cell-energy-triangles-equilateral", [](const Options& o, std::string& d) {
        const double s = 0.25;
        const Vec2 a{0, 0}, b{s, 0}, c = s * hex_e2();
        const double closed = cell_energy_triangles(a, b, c);
        const double kite = oracles::kite_second_moment_quadrature(a, b, c);
        const double reference = 10.0 / (288.0 * std::sqrt(3.0)) * s * s * s * s;
        d = "closed " + num(closed) + " vs kite quadrature " + num(kite) + " vs formula " +
            num(reference);
        return close(closed, kite, 1e-12 * o.tol_scale) &&
               close(closed, reference, 1e-13 * o.tol_scale);
    });

    add("cell-energy-triangles-right-isoceles", [](const Options& o, std::string& d) {
        // obtuse-free scalene sample: still matches the kite quadrature
        const Vec2 a{0, 0}, b{0.31, 0.02}, c{0.12, 0.27};
        const double closed = cell_energy_triangles(a, b, c);
        const double kite = oracles::kite_second_moment_quadrature(a, b, c);
        d = num(closed) + " vs " + num(kite);
        return close(closed, kite, 1e-10 * o.tol_scale);
    });

    add("cell-energy-identity-hexagon", [](const Options& o, std::string& d) {
        const HexLattice lat(3);
        const auto dia = voronoi_periodic(sample_points(DeformationField::identity(), lat), lat,
                                          VoronoiMode::hexagon);
        const double e = cell_energy(dia, 0);
        const double eps4 = std::pow(lat.epsilon, 4);
        const double reference = 5.0 / (24.0 * std::sqrt(3.0)) * eps4;
        d = num(e) + " vs (5/(24 sqrt3)) eps^4 " + num(reference);
        return close(e, reference, 1e-12 * o.tol_scale);
    });

    add("cell-energy-path-equivalence", [](const Options& o, std::string& d) {
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const HexLattice lat(4);
            const DeformationField f = random_band_limited_field(0.025, o.seed + 40 + trial);
            const auto pts = sample_points(f, lat);
            const auto hex = voronoi_periodic(pts, lat, VoronoiMode::hexagon);
            const auto gen = voronoi_periodic(pts, lat, VoronoiMode::general);
            for (std::size_t i = 0; i < hex.cells.size(); ++i) {
                const double a = cell_energy(hex, i);
                const double b = cell_energy(gen, i);
                worst = std::max(worst, std::abs(a - b) / std::max(a, b));
            }
        }
        d = "max rel gap " + num(worst);
        return worst < 1e-10 * o.tol_scale;
    });

    add("quantization-energy-scaling", [](const Options& o, std::string& d) {
        const double q8 = quantization_energy(DeformationField::identity(), HexLattice(8));
        const double q16 = quantization_energy(DeformationField::identity(), HexLattice(16));
        const double ref8 = 5.0 / (24.0 * std::sqrt(3.0)) / 64.0;
        d = "Q(1/8) " + num(q8) + " vs closed form " + num(ref8) + ", ratio q16/q8 " + num(q16 / q8);
        return close(q8, ref8, 1e-13 * o.tol_scale) && close(q16 / q8, 0.25, 1e-12 * o.tol_scale);
    });

    add("quantization-minimality-near-identity", [](const Options& o, std::string& d) {
        const HexLattice lat(8);
        const double q_id = quantization_energy(DeformationField::identity(), lat);
        double q_min = 1e300;
        double min_cell = 1e300;
        for (int i = 0; i < 200; ++i) {
            const DeformationField f = random_band_limited_field(0.02 * (0.1 + 0.9 * (i / 199.0)),
                                                                 o.seed + 100 + i);
            const auto dia = voronoi_periodic(sample_points(f, lat), lat, VoronoiMode::hexagon);
            double q = 0.0;
            for (std::size_t c = 0; c < dia.cells.size(); ++c) {
                const double e = cell_energy(dia, c);
                q += e;
                min_cell = std::min(min_cell, e);
            }
            q_min = std::min(q_min, q);
        }
        d = "min over 200 perturbations " + num(q_min) + " vs identity " + num(q_id) +
            ", min cell energy " + num(min_cell);
        return q_min >= q_id * (1.0 - 1e-12);
    });

    add("deformed-domain-volume", [](const Options& o, std::string& d) {
        // |X(Pi)| = integral of det(nabla X) = |Pi| for periodic mean-zero
        // deformations; the value is often normalized to 1, which only
        // matches after dividing |Pi| away
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            const DeformationField f = random_band_limited_field(0.03, o.seed + 150 + i);
            const double vol =
                integrate_over_pi([&](Vec2 x) { return f.gradient(x).det(); }, 64);
            worst = std::max(worst, std::abs(vol - area_pi()));
        }
        d = "max | |X(Pi)| - |Pi| | = " + num(worst) + "; |Pi| = " + num(area_pi()) +
            " (stated unit volume differs by the factor |Pi|)";
        return worst < 1e-10 * o.tol_scale;
    });

    add("ball-average-sandwich", [](const Options& o, std::string& d) {
        const HexLattice lat(4);
        const DeformationField id = DeformationField::identity();
        const auto ref = ball_average_reference(id, lat);
        const double L = 8.0;
        const auto a = ball_average(id, lat, L, 200000, o.seed + 160, 6);
        const auto b = ball_average(id, lat, L + diam_pi(), 200000, o.seed + 161, 6);
        const double diff = std::abs(a.value - b.value);
        const double bound = 3.0 * ref.per_unit_area * 2.0 * diam_pi() / L +
                             3.0 * (a.std_error + b.std_error);
        const double gap_unit = std::abs(a.value - ref.per_unit_area);
        const double gap_raw = std::abs(a.value - ref.per_period_integral);
        d = "|BA(L) - BA(L+diam)| = " + num(diff) + " <= " + num(bound) +
            "; limit matches Q/|Pi| (gap " + num(gap_unit) + ") not Q (gap " + num(gap_raw) + ")";
        return diff <= bound && gap_unit < 0.1 * gap_raw;
    });

    add("eps-ratio-identity-exact", [](const Options& o, std::string& d) {
        // the sweep ratio |Pi| Q / (eps^2 F) is exactly one at the identity
        const double functional = energy_functional(DeformationField::identity(), 16);
        double worst = 0.0;
        for (int n : {2, 4}) {
            const HexLattice lat(n);
            const double q = quantization_energy(DeformationField::identity(), lat);
            const double ratio = q * area_pi() / (lat.epsilon * lat.epsilon * functional);
            worst = std::max(worst, std::abs(ratio - 1.0));
        }
        d = "max |ratio - 1| = " + num(worst);
        return worst < 1e-13 * o.tol_scale;
    });

    add("optimal-masses-partition", [](const Options& o, std::string& d) {
        const HexLattice lat(6);
        const DeformationField f = random_band_limited_field(0.03, o.seed + 300);
        const auto dia = voronoi_periodic(sample_points(f, lat), lat, VoronoiMode::hexagon);
        const auto masses = optimal_masses(dia);
        double sum = 0.0;
        for (double m : masses) sum += m;
        double worst = 0.0;
        for (std::size_t i = 0; i < masses.size(); ++i) {
            worst = std::max(worst,
                             std::abs(masses[i] - dia.cells[i].area() / area_pi()));
        }
        d = "sum " + num(sum) + ", max area mismatch " + num(worst);
        return close(sum, 1.0, 1e-12 * o.tol_scale) && worst < 1e-15;
    });

    // ---- continuum energy ----------------------------------------------------
    add("phi-identity-and-homogeneity", [](const Options& o, std::string& d) {
        const double p = phi(hex_e1(), Mat2::identity());
        Rng rng(o.seed + 400);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            for (const Vec2& e : energy_directions()) {
                worst = std::max(worst, std::abs(phi(e, M * 2.0) - phi(e, M)));
                worst = std::max(worst, std::abs(phi(e, M * 0.5) - phi(e, M)));
            }
        }
        d = "phi(e,I) " + num(p) + ", max homogeneity defect " + num(worst);
        return close(p, 1.0 / std::sqrt(3.0), 1e-15 * o.tol_scale) && worst < 1e-12 * o.tol_scale;
    });

    add("phi-rotation-covariance", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 401);
        const Mat2 R = rotation_pi_3();
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            for (const Vec2& e : energy_directions()) {
                worst = std::max(worst,
                                 std::abs(phi(R * e, M) - phi(e, R.transpose() * M * R)));
            }
        }
        d = "max defect " + num(worst);
        return worst < 1e-12 * o.tol_scale;
    });

    add("phi-closed-forms", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 402);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            worst = std::max(worst, std::abs(phi_closed_form_e1(M) - phi(hex_e1(), M)));
            worst = std::max(worst, std::abs(phi_closed_form_e2(M) - phi(hex_e2(), M)));
            worst = std::max(worst, std::abs(phi_closed_form_e12(M) - phi(hex_e12(), M)));
        }
        const Mat2 D{1.0, 0.0, 0.0, 1.1};
        worst = std::max(worst, std::abs(phi_closed_form_e1(D) - phi(hex_e1(), D)));
        d = "max defect " + num(worst);
        return worst < 1e-12 * o.tol_scale;
    });

    add("energy-density-identity-chain", [](const Options& o, std::string& d) {
        const double f_i = energy_density(Mat2::identity());
        const double taylor0 = taylor_F(Mat2{}, 0.0, 1);
        const double p_norm = polynomial_P(1, 0, 0, 1) / (96.0 * std::sqrt(3.0));
        const HexLattice lat(2);
        const auto dia = voronoi_periodic(sample_points(DeformationField::identity(), lat), lat,
                                          VoronoiMode::hexagon);
        const double cell = cell_energy(dia, 0) / std::pow(lat.epsilon, 4);
        const double hex_moment =
            polygon_second_moment(regular_hexagon({0, 0}, lat.epsilon / std::sqrt(3.0)), {0, 0}) /
            std::pow(lat.epsilon, 4);
        const double ref = 5.0 / (24.0 * std::sqrt(3.0));
        d = "F(I)=" + num(f_i) + " taylor=" + num(taylor0) + " P/96sqrt3=" + num(p_norm) +
            " cell=" + num(cell) + " hexagon=" + num(hex_moment);
        return close(f_i, ref, 1e-12) && close(taylor0, ref, 1e-12) && close(p_norm, ref, 1e-12) &&
               close(cell, ref, 1e-12 * o.tol_scale) && close(hex_moment, ref, 1e-12 * o.tol_scale);
    });

    add("energy-density-homogeneity", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 403);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            for (double s : {0.5, 2.0}) {
                worst = std::max(worst, std::abs(energy_density(M * s) -
                                                 s * s * s * s * energy_density(M)) /
                                            energy_density(M));
            }
        }
        const double fN = energy_density(Mat2::identity() * 1.01);
        const double ref = std::pow(1.01, 4) * 10.0 / (48.0 * std::sqrt(3.0));
        d = "max rel defect " + num(worst) + ", F(1.01 I) " + num(fN) + " vs " + num(ref);
        return worst < 1e-12 * o.tol_scale && close(fN, ref, 1e-13 * o.tol_scale);
    });

    add("P-vs-F-identity", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 404);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            const double p = detail::polynomial_P_maybe_mutated(M.a11, M.a12, M.a21, M.a22,
                                                                o.mutate_p_sign);
            const double f = 96.0 * std::sqrt(3.0) * M.det() * energy_density(M);
            worst = std::max(worst, std::abs(p - f) / std::max(std::abs(p), std::abs(f)));
        }
        const double p_id = detail::polynomial_P_maybe_mutated(1, 0, 0, 1, o.mutate_p_sign);
        const double p_11 = detail::polynomial_P_maybe_mutated(1, 1, 0, 1, o.mutate_p_sign);
        d = "P(1,0,0,1)=" + num(p_id) + " P(1,1,0,1)=" + num(p_11) + ", max rel gap " + num(worst);
        return worst < 1e-10 * o.tol_scale && close(p_id, 20.0, 1e-14) && close(p_11, 17.0, 1e-14);
    });

    add("Q-plus-minus-split", [](const Options& o, std::string& d) {
        const auto [qp0, qm0] = q_plus_minus(1, 0, 0, 1);
        const auto [qp1, qm1] = q_plus_minus(1, 1, 0, 1);
        Rng rng(o.seed + 405);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            const auto [qp, qm] = q_plus_minus(M.a11, M.a12, M.a21, M.a22);
            const double p = polynomial_P(M.a11, M.a12, M.a21, M.a22);
            worst = std::max(worst, std::abs(p - 0.5 * (qp + qm)) / std::max(1.0, std::abs(p)));
        }
        d = "Q+-(I)=(" + num(qp0) + "," + num(qm0) + "), Q+-(1,1,0,1)=(" + num(qp1) + "," +
            num(qm1) + "), split defect " + num(worst);
        // direct evaluation: Q+(I) = 2(24-4) = 40, Q-(I) = 0 (s = 0 input)
        return close(qp0, 40.0, 1e-14) && qm0 == 0.0 && close(qp1, 45.0, 1e-14) &&
               close(qm1, -11.0, 1e-14) && close(0.5 * (qp1 + qm1), 17.0, 1e-14) &&
               worst < 1e-10 * o.tol_scale;
    });

    add("trace-form-discrepancy", [](const Options& o, std::string& d) {
        // the printed first trace factor (2S - I) does not reproduce F; the
        // (2I - S) arrangement does. Detect and report.
        const double printed = trace_form_as_printed(Mat2::identity()) * 96.0 * std::sqrt(3.0);
        const double corrected = trace_form_corrected(Mat2::identity()) * 96.0 * std::sqrt(3.0);
        Rng rng(o.seed + 406);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.05);
            worst = std::max(worst, std::abs(trace_form_corrected(M) - energy_density(M)) /
                                        energy_density(M));
        }
        d = "printed form at I: " + num(printed) + " (expected -16), corrected: " + num(corrected) +
            " (expected 20), corrected-vs-F defect " + num(worst);
        return close(printed, -16.0, 1e-12) && close(corrected, 20.0, 1e-12) &&
               worst < 1e-10 * o.tol_scale;
    });

    add("taylor-homogeneity-order3", [](const Options& o, std::string& d) {
        // 48 F(I + eps I) = (10/sqrt3)(1+eps)^4; the series through eps^3 must match
        const double eps = 0.01;
        const double t3 = taylor_F(Mat2::identity(), eps, 3);
        const double ref = (10.0 + 40.0 * eps + 60.0 * eps * eps + 40.0 * eps * eps * eps) /
                           (48.0 * std::sqrt(3.0));
        d = num(t3) + " vs " + num(ref);
        return close(t3, ref, 1e-14 * o.tol_scale);
    });

    add("taylor-remainder-order", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 407);
        double worst_slope = 10.0;
        for (int trial = 0; trial < 20; ++trial) {
            Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const double nn = N.frobenius_norm();
            if (nn > 1.0) N = N * (1.0 / nn);
            std::vector<double> xs, ys;
            for (double le = -1.0; le >= -3.01; le -= 0.5) {
                const double eps = std::pow(10.0, le);
                const double res =
                    std::abs(energy_density(Mat2::identity() + N * eps) - taylor_F(N, eps, 3));
                if (res > 0.0) {
                    xs.push_back(std::log(eps));
                    ys.push_back(std::log(res));
                }
            }
            if (xs.size() >= 3) worst_slope = std::min(worst_slope, fit_line(xs, ys).slope);
        }
        d = "min fitted slope " + num(worst_slope);
        return worst_slope >= 3.8 / o.tol_scale;
    });

    add("A-tensor-identity-and-homogeneity", [](const Options& o, std::string& d) {
        const Mat2 A1 = A_tensor(hex_e1(), Mat2::identity());
        const Mat2 expect{-0.5, 0.0, 0.0, 0.5};
        Rng rng(o.seed + 408);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            const Mat2 As = A_tensor(hex_e2(), M * 2.0) * 2.0;
            worst = std::max(worst, (As - A_tensor(hex_e2(), M)).frobenius_norm());
        }
        d = "A(e1,I) err " + num((A1 - expect).frobenius_norm()) + ", trace " + num(A1.trace()) +
            ", homogeneity defect " + num(worst);
        return (A1 - expect).frobenius_norm() < 1e-14 && std::abs(A1.trace()) < 1e-14 &&
               worst < 1e-13 * o.tol_scale;
    });

    add("dphi-vs-finite-differences", [](const Options& o, std::string& d) {
        // the demanded domain ||M - I||_2 <= 0.1 reaches Phi ~ 0.42, below the
        // flow-path guard of 1/2; the formulas stay exact there, so the
        // oracle runs with the guard relaxed to 0.25
        Rng rng(o.seed + 409);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            const Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
            for (const Vec2& e : energy_directions()) {
                const double an = dphi(e, M, N, 0.25);
                const double fd = oracles::central_difference(
                    [&](double t) { return phi(e, M + N * t); });
                worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
            }
        }
        // scaling direction: phi is degree-0 homogeneous
        const Mat2 M = detail::random_near_identity(rng, 0.05);
        const double scaling = std::abs(dphi(hex_e1(), M, M, 0.25));
        // closed-form derivative of the near-identity rational expression at I
        const double closed = dphi(hex_e1(), Mat2::identity(), Mat2{1, 0, 0, -1});
        d = "max rel err " + num(worst) + ", scaling dir " + num(scaling) + ", dphi(I)[S] " +
            num(closed) + " vs -4/sqrt3 " + num(-4.0 / std::sqrt(3.0));
        return worst < 1e-8 * o.tol_scale && scaling < 1e-12 &&
               close(closed, -4.0 / std::sqrt(3.0), 1e-12);
    });

    add("grad-F-vs-finite-differences", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 410);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            const Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
            const double an = frobenius_dot(grad_F(M, 0.25), N);
            const double fd = oracles::central_difference(
                [&](double t) { return energy_density(M + N * t); }, 1e-5);
            worst = std::max(worst, std::abs(an - fd) / std::max(1e-9, std::abs(fd)));
        }
        const Mat2 gI = grad_F(Mat2::identity());
        const Mat2 refI = Mat2::identity() * (5.0 / (12.0 * std::sqrt(3.0)));
        d = "max rel err " + num(worst) + ", |grad F(I) - (5/(12 sqrt3)) I| " +
            num((gI - refI).frobenius_norm());
        return worst < 1e-6 * o.tol_scale && (gI - refI).frobenius_norm() < 1e-12;
    });

    add("grad-F-euler-relation", [](const Options& o, std::string& d) {
        Rng rng(o.seed + 411);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = detail::random_near_identity(rng, 0.1);
            const double lhs = frobenius_dot(grad_F(M, 0.25), M);
            const double rhs = 4.0 * energy_density(M);
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
        }
        d = "max rel defect " + num(worst);
        return worst < 1e-10 * o.tol_scale;
    });

    add("variational-gradient-gateaux", [](const Options& o, std::string& d) {
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            const DeformationField X = random_band_limited_field(0.02, o.seed + 500 + trial);
            const int m = 24;
            // random direction, normalized to unit L^2 norm so the pairing is
            // well above the roundoff floor of the difference quotient
            DeformationField Y = random_band_limited_field(0.015, o.seed + 600 + trial);
            const double ynorm = sample_displacement(Y, m).l2_norm();
            Y = add_scaled(DeformationField::identity(), Y, 1.0 / ynorm);
            const GridVectorField g = variational_gradient(X, m);
            const GridVectorField ysamp = sample_displacement(Y, m);
            const double pairing = GridVectorField::l2_dot(g, ysamp);
            const double tau = 1e-6;
            const double fp = energy_functional(add_scaled(X, Y, tau), m);
            const double fm = energy_functional(add_scaled(X, Y, -tau), m);
            const double fd = (fp - fm) / (2.0 * tau);
            const double scale = std::max(std::abs(fd), g.l2_norm()); // Cauchy-Schwarz scale
            worst = std::max(worst, std::abs(pairing - fd) / std::max(1e-12, scale));
        }
        const GridVectorField g_id = variational_gradient(DeformationField::identity(), 16);
        double idmax = 0.0;
        for (const Vec2& v : g_id.values) idmax = std::max(idmax, v.norm());
        const GridVectorField g = variational_gradient(random_band_limited_field(0.02, o.seed), 24);
        d = "max rel err " + num(worst) + ", |grad at id| " + num(idmax) + ", mean " +
            num(g.mean().norm());
        return worst < 1e-6 * o.tol_scale && idmax < 1e-12 && g.mean().norm() < 1e-13;
    });

    add("F0-expansion-and-null-lagrangian", [](const Options& o, std::string& d) {
        // F0(I + eps N) quadratic coefficients from the definitional path
        Rng rng(o.seed + 412);
        const double s3 = std::sqrt(3.0);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
            const double eps = 1e-4;
            const double quad =
                (F0(Mat2::identity() + N * eps) + F0(Mat2::identity() - N * eps) -
                 2.0 * F0(Mat2::identity())) /
                (eps * eps);
            const double ref = 2.0 * (5.0 / (24.0 * s3) * N.trace() * N.trace() +
                                      1.0 / (16.0 * s3) * N.frobenius_norm2());
            worst = std::max(worst, std::abs(quad - ref) / std::max(1.0, std::abs(ref)));
        }
        double worst_fn = 0.0;
        for (int i = 0; i < 20; ++i) {
            const DeformationField f = random_band_limited_field(0.02, o.seed + 700 + i);
            const double a = energy_functional(f, 48);
            const double b = energy_functional_F0(f, 48);
            worst_fn = std::max(worst_fn, std::abs(a - b) / std::abs(a));
        }
        d = "quadratic defect " + num(worst) + ", functional F vs F0 gap " + num(worst_fn);
        return worst < 1e-6 * o.tol_scale && worst_fn < 1e-9 * o.tol_scale;
    });

    add("F0-hessian-rayleigh-bound", [](const Options& o, std::string& d) {
        const auto eig = hessian_F0_eigenvalues(Mat2::identity());
        double mn = 1e300;
        for (double e : eig) mn = std::min(mn, e);
        const double bound = 1.0 / (8.0 * std::sqrt(3.0));
        d = "min eig " + num(mn) + " vs 1/(8 sqrt3) " + num(bound);
        return mn >= bound - 1e-6 * o.tol_scale;
    });

    add("convexified-G-inside-and-far", [](const Options& o, std::string& d) {
        const ConvexifiedEnergy ce = estimate_coercivity(o.seed + 413);
        const ConvexifiedG G(ce);
        Rng rng(o.seed + 414);
        double worst_inside = 0.0;
        for (int i = 0; i < 40; ++i) {
            Mat2 U{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
            U = U * (0.45 * G.blend_radius() / U.frobenius_norm());
            const Mat2 M = Mat2::identity() + U;
            worst_inside = std::max(worst_inside, std::abs(G.value(M) - F0(M)));
        }
        // far field: value sits inside the quadratic envelope of the bounds
        const Mat2 Nfar{0.3, -0.8, 0.5, 0.1};
        const Mat2 A = Nfar * 10.0;
        const double gval = G.value(Mat2::identity() + A);
        const double base = 5.0 / (24.0 * std::sqrt(3.0));
        const double lo = base + 0.25 * ce.lambda * A.frobenius_norm2();
        const double hi = base + ce.Lambda * A.frobenius_norm2();
        const auto rep = G.hessian_bounds_report(o.seed + 415);
        d = "inside gap " + num(worst_inside) + ", far value " + num(gval) + " in [" + num(lo) +
            "," + num(hi) + "], hessian eig [" + num(rep.min_eig) + "," + num(rep.max_eig) +
            "] vs bounds [" + num(rep.lower_bound) + "," + num(rep.upper_bound) + "]";
        return worst_inside == 0.0 && gval >= lo && gval <= hi && rep.pass;
    });

    add("energy-functional-quadrature-stability", [](const Options& o, std::string& d) {
        const DeformationField f = random_band_limited_field(0.02, o.seed + 416);
        const double a = energy_functional(f, 48);
        const double b = energy_functional(f, 96);
        const double idv = energy_functional(DeformationField::identity(), 16);
        d = "m=48: " + num(a) + ", m=96: " + num(b) + ", F(id) " + num(idv) + " vs 5/48 " +
            num(5.0 / 48.0);
        return std::abs(a - b) < 1e-10 * o.tol_scale && close(idv, 5.0 / 48.0, 1e-14);
    });

    // ---- flows -----------------------------------------------------------------
    add("particle-rhs-gradient-oracle", [](const Options& o, std::string& d) {
        // the Lloyd force formula is derived, so the finite-difference check
        // against Q itself is mandatory before the flow uses it
        const HexLattice lat(4);
        ParticleState st = jittered_lattice(lat, 0.1 * lat.epsilon, o.seed + 417);
        const ParticleForces forces = particle_rhs(st);
        Rng rng(o.seed + 418);
        double worst = 0.0;
        for (int trial = 0; trial < 6; ++trial) {
            std::vector<Vec2> dir(st.points.size());
            double nn = 0.0;
            for (Vec2& v : dir) {
                v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
                nn += v.norm2();
            }
            nn = std::sqrt(nn);
            for (Vec2& v : dir) v *= 1.0 / nn;
            const double h = 1e-6;
            auto q_at = [&](double t) {
                ParticleState s2 = st;
                for (std::size_t i = 0; i < s2.points.size(); ++i)
                    s2.points[i] = lat.wrap(s2.points[i] + t * dir[i]);
                return particle_rhs(s2).energy;
            };
            const double fd = (q_at(h) - q_at(-h)) / (2.0 * h);
            double an = 0.0; // dQ[dir] = -<force, dir>
            for (std::size_t i = 0; i < dir.size(); ++i) an -= dot(forces.force[i], dir[i]);
            worst = std::max(worst, std::abs(fd - an) / std::max(1e-12, std::abs(fd)));
        }
        d = "max rel err " + num(worst);
        return worst < 1e-6 * o.tol_scale;
    });

    add("particle-restoring-force", [](const Options& o, std::string& d) {
        (void)o;
        const HexLattice lat(4);
        ParticleState st{lat, sample_points(DeformationField::identity(), lat), 0.0};
        const Vec2 delta{0.02 * lat.epsilon, 0.013 * lat.epsilon};
        st.points[5] = lat.wrap(st.points[5] + delta);
        const double along = dot(particle_rhs(st).force[5], delta);
        d = "force . displacement = " + num(along);
        return along < 0.0;
    });

    add("particle-flow-fixed-point-and-descent", [](const Options& o, std::string& d) {
        const HexLattice lat(4);
        const ParticleState hexagonal{lat, sample_points(DeformationField::identity(), lat), 0.0};
        const ParticleForces at_lattice = particle_rhs(hexagonal);
        double fmax = 0.0;
        for (const Vec2& f : at_lattice.force) fmax = std::max(fmax, f.norm());

        ParticleState st = jittered_lattice(HexLattice(8), 0.1 / 8.0, o.seed + 419);
        // oversized first step: rejected, halved, still monotone
        const double q0 = particle_rhs(st).energy;
        double big_dt = 1e7;
        const ParticleState after = particle_step(st, big_dt);
        const bool backtracked = big_dt < 1e7 && particle_rhs(after).energy < q0;

        ParticleFlowOptions opts;
        opts.t_final = 20.0;
        opts.max_steps = 60;
        const auto result = run_particle_flow(st, opts);
        bool monotone = true;
        const auto acc = result.trace.accepted();
        for (std::size_t i = 1; i < acc.size(); ++i)
            if (acc[i].energy >= acc[i - 1].energy) monotone = false;
        d = "lattice force max " + num(fmax) + ", backtracking " + (backtracked ? "ok" : "BAD") +
            ", monotone over " + std::to_string(acc.size()) + " steps: " + (monotone ? "yes" : "NO");
        return fmax < 1e-14 && backtracked && monotone;
    });

    add("pde-rhs-variants-agree", [](const Options& o, std::string& d) {
        const DeformationField f = random_band_limited_field(0.02, o.seed + 420);
        const PdeState st = PdeState::from_field(f, 24);
        const ConvexifiedEnergy ce = estimate_coercivity(o.seed + 421);
        const ConvexifiedG G(ce);
        const GridVectorField rf = pde_rhs(st, PdeVariant::F);
        const GridVectorField rf0 = pde_rhs(st, PdeVariant::F0);
        double gap_f = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < rf.values.size(); ++i) {
            scale = std::max(scale, rf.values[i].norm());
            gap_f = std::max(gap_f, (rf.values[i] - rf0.values[i]).norm());
        }
        // G = F0 holds inside half the blend radius, so compare on a state
        // whose gradients stay below it
        const DeformationField fsmall =
            random_band_limited_field(0.4 * G.blend_radius(), o.seed + 424);
        const PdeState st_small = PdeState::from_field(fsmall, 24);
        const GridVectorField rf0s = pde_rhs(st_small, PdeVariant::F0);
        const GridVectorField rg = pde_rhs(st_small, PdeVariant::G, G);
        double gap_g = 0.0;
        for (std::size_t i = 0; i < rg.values.size(); ++i)
            gap_g = std::max(gap_g, (rg.values[i] - rf0s.values[i]).norm());
        const GridVectorField r_id = pde_rhs(PdeState::from_field(DeformationField::identity(), 16));
        double id_norm = 0.0;
        for (const Vec2& v : r_id.values) id_norm = std::max(id_norm, v.norm());
        d = "F vs F0 " + num(gap_f / std::max(1.0, scale)) + ", G vs F0 " +
            num(gap_g / std::max(1.0, scale)) + ", rhs at id " + num(id_norm);
        return gap_f <= 1e-9 * std::max(1.0, scale) * o.tol_scale &&
               gap_g <= 1e-11 * std::max(1.0, scale) && id_norm < 1e-14;
    });

    add("pde-flow-monotone-decay", [](const Options& o, std::string& d) {
        const DeformationField f = random_band_limited_field(0.02, o.seed + 422);
        PdeFlowOptions opts;
        opts.t_final = 4.0;
        const auto result = run_pde_flow(PdeState::from_field(f, 24), PdeVariant::F, opts);
        const auto rep = decay_report(result.trace);
        const double linf = result.state.linf();
        const double mean = result.state.mean().norm();
        d = rep.summary() + ", final Linf " + num(linf) + ", |mean| " + num(mean) +
            ", lambda_min(24) " + num(linearized_smallest_eigenvalue(24));
        return rep.pass && rep.r_squared >= 0.99 && rep.fitted_rate > 0.0 && linf <= 1e-6 &&
               mean <= 1e-12;
    });

    add("pde-grid-refinement-rate", [](const Options& o, std::string& d) {
        const DeformationField f = random_band_limited_field(0.02, o.seed + 425);
        double rates[2];
        int k = 0;
        for (int m : {32, 64}) {
            PdeFlowOptions opts;
            opts.t_final = 0.8;
            const auto result = run_pde_flow(PdeState::from_field(f, m), PdeVariant::F, opts);
            rates[k++] = decay_report(result.trace).fitted_rate;
        }
        const double change = std::abs(rates[1] / rates[0] - 1.0);
        d = "fitted rate m=32: " + num(rates[0]) + ", m=64: " + num(rates[1]) +
            ", relative change " + num(change);
        return change < 0.05;
    });

    add("decay-report-negative-control", [](const Options& o, std::string& d) {
        (void)o;
        FlowTrace synthetic;
        for (int i = 0; i < 20; ++i) {
            const double t = 0.1 * i;
            const double bump = (i == 10) ? 1.5 : 1.0; // injected energy increase
            synthetic.records.push_back(
                {t, bump * std::exp(-t), std::exp(-2.0 * t), std::exp(-2.0 * t), 0.1, true});
        }
        const auto rep = decay_report(synthetic);
        d = std::string("monotone flag ") + (rep.monotone_ok ? "yes (BAD)" : "no (flagged)");
        return !rep.monotone_ok && !rep.pass;
    });

    add("hexagon-mode-guard", [](const Options& o, std::string& d) {
        // far above the smallness threshold the lattice combinatorics break:
        // pushing a site deep into the opposite triangle of its neighbors
        // forces a Delaunay flip, hexagon mode must refuse while general mode
        // still tiles the torus
        const HexLattice lat(6);
        std::vector<Vec2> pts = sample_points(DeformationField::identity(), lat);
        pts[0] = lat.wrap(pts[0] + 0.85 * lat.epsilon * (hex_e1() + hex_e2()));
        bool hexagon_failed = false;
        try {
            voronoi_periodic(pts, lat, VoronoiMode::hexagon);
        } catch (const mode_violation_error&) {
            hexagon_failed = true;
        }
        const auto gen = voronoi_periodic(pts, lat, VoronoiMode::general);
        const double area_gap = std::abs(gen.total_area() - area_pi());
        d = std::string("hexagon mode raised: ") + (hexagon_failed ? "yes" : "NO") +
            ", general mode area gap " + num(area_gap);
        return hexagon_failed && area_gap < 1e-10 * o.tol_scale;
    });

    return list;
}

struct BatteryResult {
    std::vector<CheckResult> results;
    bool all_pass = true;
};

inline BatteryResult run_battery(const Options& options = {}) {
    BatteryResult out;
    for (const auto& [name, fn] : checks()) {
        CheckResult r = fn(options);
        out.all_pass = out.all_pass && r.pass;
        out.results.push_back(std::move(r));
    }
    return out;
}

} // namespace validation
} // namespace hexquant

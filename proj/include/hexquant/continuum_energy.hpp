#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hexquant/deformation.hpp"
#include "hexquant/errors.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/interp.hpp"
#include "hexquant/lattice.hpp"
#include "hexquant/numeric.hpp"
#include "hexquant/rng.hpp"

namespace hexquant {

/// Guard below which the derivative formulas for Phi are considered outside
/// the safe neighborhood (Phi^2 > 1/4 there, with margin Phi(I) = 1/sqrt 3).
inline constexpr double kDefaultPhiMin = 0.5;

/// The three lattice directions the energy density sums over.
inline const std::array<Vec2, 3>& energy_directions() {
    static const std::array<Vec2, 3> dirs = {hex_e1(), hex_e2(), hex_e12()};
    return dirs;
}

/// Shape factor Phi(e, M) = sqrt(|MRe|^2 |MR^T e|^2 / ((3/4) det(M)^2) - 1).
inline double phi(Vec2 e, const Mat2& M) {
    const double det = M.det();
    if (det == 0.0) throw singular_error("phi: det M = 0");
    const Mat2 R = rotation_pi_3();
    const Vec2 v1 = M * (R * e);
    const Vec2 v2 = M * (R.transpose() * e);
    const double rad = v1.norm2() * v2.norm2() / (0.75 * det * det) - 1.0;
    if (rad < 0.0) {
        std::ostringstream os;
        os << "phi: negative radicand " << rad << " (configuration outside the regime)";
        throw regime_error(os.str());
    }
    return std::sqrt(rad);
}

// ---------------------------------------------------------------------------
// Closed forms near the identity (validators for phi / energy_density)
// ---------------------------------------------------------------------------

namespace detail {
inline void check_phi1_sign(double num, double den) {
    // the rational form drops the absolute value, valid while
    // alpha^2 - 3 beta^2 + gamma^2 - 3 delta^2 < 0 and det > 0
    if (num <= 0.0 || den <= 0.0)
        throw regime_error("phi closed form: sign condition violated (matrix too far from I)");
}
} // namespace detail

/// Rational expression for Phi(e1, M) near the identity:
/// (-a^2 + 3b^2 - c^2 + 3d^2) / (2 sqrt3 (ad - bc)) for M = [[a,b],[c,d]].
inline double phi_closed_form_e1(const Mat2& M) {
    const double num = -M.a11 * M.a11 + 3.0 * M.a12 * M.a12 - M.a21 * M.a21 + 3.0 * M.a22 * M.a22;
    const double den = 2.0 * std::sqrt(3.0) * M.det();
    detail::check_phi1_sign(num, den);
    return num / den;
}

/// Phi(e2, M) via the rotation identity Phi(Re, M) = Phi(e, R^T M R).
inline double phi_closed_form_e2(const Mat2& M) {
    const double num = std::sqrt(3.0) * (M.a11 * M.a11 + M.a21 * M.a21) -
                       3.0 * (M.a11 * M.a12 + M.a21 * M.a22);
    const double den = 3.0 * M.det();
    detail::check_phi1_sign(num, den);
    return num / den;
}

inline double phi_closed_form_e12(const Mat2& M) {
    const double num = std::sqrt(3.0) * (M.a11 * M.a11 + M.a21 * M.a21) +
                       3.0 * (M.a11 * M.a12 + M.a21 * M.a22);
    const double den = 3.0 * M.det();
    detail::check_phi1_sign(num, den);
    return num / den;
}

// ---------------------------------------------------------------------------
// Energy density and its matrix gradient
// ---------------------------------------------------------------------------

/// Limit energy density F(M) = (1/48) sum over the three lattice directions
/// of |M w|^4 Phi(w, M) (3 + Phi(w, M)^2). Degree-4 homogeneous; this
/// definitional path anchors every closed form in the library.
inline double energy_density(const Mat2& M) {
    double total = 0.0;
    for (const Vec2& w : energy_directions()) {
        const double mw2 = (M * w).norm2();
        const double p = phi(w, M);
        total += mw2 * mw2 * p * (3.0 + p * p);
    }
    return total / 48.0;
}

/// A(e, M) = (Re ⊗ MRe)/|MRe|^2 + (R^T e ⊗ MR^T e)/|MR^T e|^2 - M^{-1};
/// homogeneous of degree -1 in M; trace pairing gives the Phi derivative.
inline Mat2 A_tensor(Vec2 e, const Mat2& M) {
    const Mat2 R = rotation_pi_3();
    const Vec2 re = R * e;
    const Vec2 rte = R.transpose() * e;
    const Vec2 v1 = M * re;
    const Vec2 v2 = M * rte;
    if (v1.norm2() == 0.0 || v2.norm2() == 0.0)
        throw singular_error("A_tensor: M annihilates a rotated direction");
    return outer(re, v1) * (1.0 / v1.norm2()) + outer(rte, v2) * (1.0 / v2.norm2()) - M.inverse();
}

/// Directional derivative d/dt Phi(e, M + t N) |_{t=0}
///   = ((Phi^2 + 1)/Phi) trace(A(e, M) N).
inline double dphi(Vec2 e, const Mat2& M, const Mat2& N, double phi_min = kDefaultPhiMin) {
    const double p = phi(e, M);
    if (p <= phi_min) {
        std::ostringstream os;
        os << "dphi: Phi = " << p << " at or below the guard " << phi_min;
        throw regime_error(os.str());
    }
    const Mat2 A = A_tensor(e, M);
    const double tr = (A * N).trace();
    return (p * p + 1.0) / p * tr;
}

/// Frobenius gradient of the energy density: <grad_F(M), N> = d/dt F(M + tN).
inline Mat2 grad_F(const Mat2& M, double phi_min = kDefaultPhiMin) {
    Mat2 g{};
    for (const Vec2& w : energy_directions()) {
        const Vec2 mw = M * w;
        const double mw2 = mw.norm2();
        const double p = phi(w, M);
        if (p <= phi_min) {
            std::ostringstream os;
            os << "grad_F: Phi = " << p << " at or below the guard " << phi_min;
            throw regime_error(os.str());
        }
        const double p2 = p * p;
        // d(|Mw|^4) pairs with (Mw) ⊗ w; d(Phi(3 + Phi^2)) = 3 (1 + Phi^2) dPhi
        g += (4.0 * mw2 * p * (3.0 + p2)) * outer(mw, w);
        g += (3.0 * mw2 * mw2 * (1.0 + p2) * (1.0 + p2) / p) * A_tensor(w, M).transpose();
    }
    return g * (1.0 / 48.0);
}

// ---------------------------------------------------------------------------
// Closed-form algebra near the identity
// ---------------------------------------------------------------------------

/// The explicit sextic P with F(M) = P(alpha,beta,gamma,delta) / (96 sqrt3 det M)
/// for M = [[alpha, beta],[gamma, delta]] near the identity.
inline double polynomial_P(double a, double b, double c, double d) {
    const double a2 = a * a, b2 = b * b, c2 = c * c, d2 = d * d;
    return -a2 * a2 * a2 + 6.0 * a2 * a2 * b2 - 9.0 * a2 * b2 * b2 - 3.0 * a2 * a2 * c2 +
           18.0 * a2 * b2 * c2 + 9.0 * b2 * b2 * c2 - 3.0 * a2 * c2 * c2 + 12.0 * b2 * c2 * c2 -
           c2 * c2 * c2 - 12.0 * a2 * a * b * c * d - 36.0 * a * b2 * b * c * d -
           12.0 * a * b * c2 * c * d + 12.0 * a2 * a2 * d2 + 18.0 * a2 * c2 * d2 +
           6.0 * c2 * c2 * d2 - 36.0 * a * b * c * d2 * d + 9.0 * a2 * d2 * d2 -
           9.0 * c2 * d2 * d2;
}

/// Q+- split of P: P = (Q+ + Q-)/2 with
///   Q+ = t (24 d^2 - t^2),            t = a^2 + b^2 + c^2 + d^2,
///   Q- = s (12 (ab + cd)^2 - s^2),    s = a^2 - b^2 + c^2 - d^2,
/// and d = ad - bc the determinant.
inline std::pair<double, double> q_plus_minus(double a, double b, double c, double d) {
    const double t = a * a + b * b + c * c + d * d;
    const double s = a * a - b * b + c * c - d * d;
    const double det = a * d - b * c;
    const double qp = t * (24.0 * det * det - t * t);
    const double qm = s * (12.0 * (a * b + c * d) * (a * b + c * d) - s * s);
    return {qp, qm};
}

/// Truncated Taylor series of F(I + eps N) through the requested order
/// (1, 2 or 3), using the published coefficients of 48 F.
inline double taylor_F(const Mat2& N, double eps, int order) {
    if (order < 1 || order > 3) throw geometry_error("taylor_F: order must be 1, 2 or 3");
    const double a = N.a11, b = N.a12, c = N.a21, d = N.a22;
    const double s3 = std::sqrt(3.0);
    double f48 = 10.0 / s3 + 20.0 / s3 * eps * (a + d);
    if (order >= 2) {
        f48 += eps * eps / s3 *
               (13.0 * a * a + 3.0 * b * b - 14.0 * b * c + 3.0 * c * c + 34.0 * a * d +
                13.0 * d * d);
    }
    if (order >= 3) {
        f48 += eps * eps * eps / s3 *
               (a * a * a + 9.0 * a * b * b - 2.0 * a * b * c + 9.0 * a * c * c +
                23.0 * a * a * d - 3.0 * b * b * d - 26.0 * b * c * d - 3.0 * c * c * d +
                11.0 * a * d * d + 5.0 * d * d * d);
    }
    return f48 / 48.0;
}

/// Near-identity trace form in its published arrangement, with the first
/// term carrying trace(M^T M (2S - I)). Disagrees with F: at M = I it yields
/// -16/(96 sqrt3) against the correct 20/(96 sqrt3).
inline double trace_form_as_printed(const Mat2& M) {
    const double s3 = std::sqrt(3.0);
    const Mat2 S{1.0, 0.0, 0.0, -1.0};
    const Mat2 MtM = M.transpose() * M;
    const double det = M.det();
    if (det == 0.0) throw singular_error("trace_form_as_printed: det M = 0");
    const double t = MtM.trace();
    const double ts = (MtM * S).trace();
    const Mat2 two_s_minus_i = S * 2.0 - Mat2::identity();
    return det * (MtM * two_s_minus_i).trace() / (16.0 * s3) +
           t * t * ts / (64.0 * s3 * det) - t * t * t / (192.0 * s3 * det) -
           ts * ts * ts / (48.0 * s3 * det);
}

/// Trace form with the first factor rearranged to (2I - S), which restores
/// the identity with P and with the definitional F on the regime domain.
inline double trace_form_corrected(const Mat2& M) {
    const double s3 = std::sqrt(3.0);
    const Mat2 S{1.0, 0.0, 0.0, -1.0};
    const Mat2 MtM = M.transpose() * M;
    const double det = M.det();
    if (det == 0.0) throw singular_error("trace_form_corrected: det M = 0");
    const double t = MtM.trace();
    const double ts = (MtM * S).trace();
    const Mat2 two_i_minus_s = Mat2::identity() * 2.0 - S;
    return det * (MtM * two_i_minus_s).trace() / (16.0 * s3) +
           t * t * ts / (64.0 * s3 * det) - t * t * t / (192.0 * s3 * det) -
           ts * ts * ts / (48.0 * s3 * det);
}

// ---------------------------------------------------------------------------
// Convexified density
// ---------------------------------------------------------------------------

/// F0(M) = F(M) - (5/(12 sqrt3)) trace(M - I) - (7/(24 sqrt3)) det(M - I).
/// The subtracted terms are null Lagrangians on periodic fields, so the
/// functional of F0 equals the functional of F while the density gains a
/// positive Hessian at I.
inline double F0(const Mat2& M) {
    const double s3 = std::sqrt(3.0);
    const Mat2 A = M - Mat2::identity();
    return energy_density(M) - 5.0 / (12.0 * s3) * A.trace() - 7.0 / (24.0 * s3) * A.det();
}

inline Mat2 grad_F0(const Mat2& M, double phi_min = kDefaultPhiMin) {
    const double s3 = std::sqrt(3.0);
    const Mat2 A = M - Mat2::identity();
    return grad_F(M, phi_min) - Mat2::identity() * (5.0 / (12.0 * s3)) -
           A.cofactor() * (7.0 / (24.0 * s3));
}

/// Numeric 4x4 Hessian of a matrix function via central differences of its
/// gradient, in the basis (a11, a12, a21, a22).
template <typename GradFn>
std::vector<double> hessian_matrix(GradFn&& grad, const Mat2& M, double h = 1e-5) {
    auto basis = [](int k) {
        Mat2 E{};
        (k == 0 ? E.a11 : k == 1 ? E.a12 : k == 2 ? E.a21 : E.a22) = 1.0;
        return E;
    };
    std::vector<double> H(16, 0.0);
    for (int k = 0; k < 4; ++k) {
        const Mat2 gp = grad(M + basis(k) * h);
        const Mat2 gm = grad(M - basis(k) * h);
        const Mat2 col = (gp - gm) * (1.0 / (2.0 * h));
        const double entries[4] = {col.a11, col.a12, col.a21, col.a22};
        for (int r = 0; r < 4; ++r) H[std::size_t(r) * 4 + k] = entries[r];
    }
    for (int r = 0; r < 4; ++r) {
        for (int k = r + 1; k < 4; ++k) {
            const double s = 0.5 * (H[std::size_t(r) * 4 + k] + H[std::size_t(k) * 4 + r]);
            H[std::size_t(r) * 4 + k] = H[std::size_t(k) * 4 + r] = s;
        }
    }
    return H;
}

/// Hessian eigenvalues of F0. The guard is relaxed below the flow default:
/// the closed forms stay exact down to Phi > 0, and coercivity sampling has
/// to reach radii where Phi dips under 1/2.
inline std::vector<double> hessian_F0_eigenvalues(const Mat2& M, double phi_min = 0.2) {
    return symmetric_eigenvalues(
        hessian_matrix([phi_min](const Mat2& X) { return grad_F0(X, phi_min); }, M), 4);
}

/// Ellipticity data of the convexified density: lambda is pinned to the
/// sharp identity bound 1/(8 sqrt3); rho0 is the largest sampled radius on
/// which min eig(Hess F0) stays at or above lambda (within tolerance), capped
/// at the fallback 0.2; Lambda is the largest Hessian eigenvalue seen on that
/// ball.
struct ConvexifiedEnergy {
    double rho0 = 0.2;
    double lambda = 1.0 / (8.0 * std::sqrt(3.0));
    double Lambda = 23.0 / (24.0 * std::sqrt(3.0));
};

inline ConvexifiedEnergy estimate_coercivity(std::uint64_t seed = 71, int shells = 10,
                                             int per_shell = 64, double rho_cap = 0.2) {
    ConvexifiedEnergy ce;
    Rng rng(seed);
    double rho = 0.0;
    double biggest = 0.0;
    const double tol = 1e-6;
    for (int s = 1; s <= shells; ++s) {
        const double r = rho_cap * s / shells;
        double shell_min = 1e300, shell_max = -1e300;
        bool regime_ok = true;
        for (int i = 0; i < per_shell; ++i) {
            Mat2 U{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
            const double nn = U.frobenius_norm();
            if (nn == 0.0) continue;
            const Mat2 M = Mat2::identity() + U * (r / nn);
            try {
                const auto eig = hessian_F0_eigenvalues(M);
                for (double e : eig) {
                    shell_min = std::min(shell_min, e);
                    shell_max = std::max(shell_max, e);
                }
            } catch (const regime_error&) {
                regime_ok = false;
                break;
            }
        }
        if (!regime_ok || shell_min < ce.lambda - tol) break;
        rho = r;
        biggest = std::max(biggest, shell_max);
    }
    if (rho > 0.0) {
        ce.rho0 = rho;
        ce.Lambda = std::max(biggest, ce.lambda);
    }
    return ce;
}

struct HessianBoundsReport {
    double min_eig = 0.0;
    double max_eig = 0.0;
    double lower_bound = 0.0; // lambda / 2
    double upper_bound = 0.0; // 2 Lambda
    bool pass = false;
};

/// Globally convex C^2 extension G of F0: G = F0 inside half the blend
/// radius, the tangent quadratic of F0 at I in the far field, and a C^2
/// smoothstep blend on the annulus between them.
///
/// Two deliberate choices keep the global Hessian bounds
/// lambda/2 <= Hess G <= 2 Lambda actually true (see hessian_bounds_report):
/// the far field is the tangent quadratic of F0 at I rather than the
/// (lambda/2)-quadratic, which makes the blend error O(third derivative x
/// blend radius); and the blend radius is capped at 0.03 because the blend
/// cross terms at the full coercivity radius 0.2 measurably push an
/// eigenvalue below lambda/2. Only existence of some C^2 extension matters;
/// the radial blend at the full rho0 is not one.
class ConvexifiedG {
  public:
    explicit ConvexifiedG(ConvexifiedEnergy ce = ConvexifiedEnergy{}) : ce_(ce) {
        const double s3 = std::sqrt(3.0);
        c_trace_ = 5.0 / (24.0 * s3); // coefficient of trace(A)^2 in F0(I + A)
        c_frob_ = 1.0 / (16.0 * s3);  // coefficient of ||A||^2
        f0_at_identity_ = 5.0 / (24.0 * s3);
        blend_rho0_ = std::min(ce_.rho0, 0.03);
    }

    const ConvexifiedEnergy& coercivity() const { return ce_; }

    /// G equals F0 exactly inside half this radius.
    double blend_radius() const { return blend_rho0_; }

    double value(const Mat2& M) const {
        const Mat2 A = M - Mat2::identity();
        const double rho = A.frobenius_norm();
        const double chi = blend(rho);
        const double q = quadratic(A);
        if (chi == 0.0) return q;
        return q + chi * (F0(M) - q);
    }

    Mat2 gradient(const Mat2& M) const {
        const Mat2 A = M - Mat2::identity();
        const double rho = A.frobenius_norm();
        const double chi = blend(rho);
        Mat2 gq = A * (2.0 * c_frob_) + Mat2::identity() * (2.0 * c_trace_ * A.trace());
        if (chi == 0.0) return gq;
        const Mat2 diff_grad = grad_F0(M, phi_min_) - gq;
        Mat2 g = gq + diff_grad * chi;
        if (chi < 1.0 && rho > 0.0) {
            const double dchi = blend_deriv(rho);
            g += A * (dchi * (F0(M) - value_quadratic(M)) / rho);
        }
        return g;
    }

    /// Samples Hessian eigenvalues of G inside, across and outside the blend
    /// annulus and compares them with the target global bounds.
    HessianBoundsReport hessian_bounds_report(std::uint64_t seed = 97, int samples = 200) const {
        Rng rng(seed);
        HessianBoundsReport rep;
        rep.lower_bound = 0.5 * ce_.lambda;
        rep.upper_bound = 2.0 * ce_.Lambda;
        rep.min_eig = 1e300;
        rep.max_eig = -1e300;
        for (int i = 0; i < samples; ++i) {
            Mat2 U{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
            const double nn = U.frobenius_norm();
            if (nn == 0.0) continue;
            // bias radii toward the annulus where the blend terms live
            const double r = blend_rho0_ * (0.05 + 1.9 * rng.uniform());
            const Mat2 M = Mat2::identity() + U * (r / nn);
            const auto eig = symmetric_eigenvalues(
                hessian_matrix([this](const Mat2& X) { return gradient(X); }, M, 1e-4), 4);
            for (double e : eig) {
                rep.min_eig = std::min(rep.min_eig, e);
                rep.max_eig = std::max(rep.max_eig, e);
            }
        }
        rep.pass = rep.min_eig >= rep.lower_bound - 1e-6 && rep.max_eig <= rep.upper_bound + 1e-6;
        return rep;
    }

  private:
    double quadratic(const Mat2& A) const {
        return f0_at_identity_ + c_trace_ * A.trace() * A.trace() + c_frob_ * A.frobenius_norm2();
    }
    double value_quadratic(const Mat2& M) const { return quadratic(M - Mat2::identity()); }

    // chi = 1 inside blend_rho0/2, 0 outside blend_rho0, C^2 smoothstep between
    double blend(double rho) const {
        const double a = 0.5 * blend_rho0_, b = blend_rho0_;
        if (rho <= a) return 1.0;
        if (rho >= b) return 0.0;
        const double t = (rho - a) / (b - a);
        return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    }
    double blend_deriv(double rho) const {
        const double a = 0.5 * blend_rho0_, b = blend_rho0_;
        if (rho <= a || rho >= b) return 0.0;
        const double t = (rho - a) / (b - a);
        return -30.0 * t * t * (1.0 - t) * (1.0 - t) / (b - a);
    }

    ConvexifiedEnergy ce_;
    double c_trace_ = 0.0;
    double c_frob_ = 0.0;
    double f0_at_identity_ = 0.0;
    double phi_min_ = 0.2; // relaxed: the blend annulus reaches past Phi = 1/2
    double blend_rho0_ = 0.03;
};

// ---------------------------------------------------------------------------
// The functional and its L^2 gradient
// ---------------------------------------------------------------------------

/// F-functional of a deformation: quadrature of F(nabla X) over Pi on the
/// periodic trapezoid grid. Grid fields default to their own resolution.
inline double energy_functional(const DeformationField& field, int m = 64) {
    if (field.kind() == DeformationField::Kind::grid) m = std::max(m, field.grid_size());
    return integrate_over_pi([&](Vec2 x) { return energy_density(field.gradient(x)); }, m);
}

/// Same quadrature with the convexified density F0. Equal to the F value for
/// periodic fields (null Lagrangian terms integrate to zero).
inline double energy_functional_F0(const DeformationField& field, int m = 64) {
    if (field.kind() == DeformationField::Kind::grid) m = std::max(m, field.grid_size());
    return integrate_over_pi([&](Vec2 x) { return F0(field.gradient(x)); }, m);
}

/// Vector field sampled on the m x m lattice-coordinate grid. Nodes are
/// u = (i/m, j/m) - 1/2 in row-major order, matching grid DeformationFields.
struct GridVectorField {
    int m = 0;
    std::vector<Vec2> values;

    Vec2& at(int i, int j) { return values[std::size_t(i) * m + j]; }
    const Vec2& at(int i, int j) const { return values[std::size_t(i) * m + j]; }

    /// L^2(Pi) inner product of two node fields (trapezoid weights).
    static double l2_dot(const GridVectorField& a, const GridVectorField& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) acc += dot(a.values[i], b.values[i]);
        return acc / double(a.values.size()) * area_pi();
    }

    double l2_norm() const { return std::sqrt(l2_dot(*this, *this)); }

    Vec2 mean() const {
        Vec2 c{0.0, 0.0};
        for (const Vec2& v : values) c += v;
        return c / double(values.size());
    }
};

namespace detail {

/// Spectral node gradients dY/du of sampled displacement values via the
/// differentiation matrix (rows for u1, columns for u2).
inline std::vector<Mat2> spectral_node_gradients(const GridVectorField& y,
                                                 const std::vector<double>& D) {
    const int m = y.m;
    std::vector<Mat2> g(std::size_t(m) * m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            Vec2 d1{0.0, 0.0}, d2{0.0, 0.0};
            for (int k = 0; k < m; ++k) {
                d1 += D[std::size_t(i) * m + k] * y.at(k, j);
                d2 += D[std::size_t(j) * m + k] * y.at(i, k);
            }
            g[std::size_t(i) * m + j] = Mat2{d1.x1, d2.x1, d1.x2, d2.x2};
        }
    }
    return g;
}

} // namespace detail

/// Discrete F-functional of node samples with spectral differentiation. For
/// band-limited fields sampled on a fine enough grid this agrees with
/// energy_functional exactly, and variational_gradient below is its exact
/// gradient, which is what the Gateaux tests exercise.
inline double energy_functional_sampled(const GridVectorField& y) {
    const auto D = spectral_diff_matrix(y.m);
    const auto grads = detail::spectral_node_gradients(y, D);
    const Mat2 Binv = hex_basis_inverse();
    double acc = 0.0;
    for (const Mat2& gu : grads) acc += energy_density(Mat2::identity() + gu * Binv);
    return acc / double(grads.size()) * area_pi();
}

inline GridVectorField sample_displacement(const DeformationField& field, int m) {
    GridVectorField y;
    y.m = m;
    y.values.reserve(std::size_t(m) * m);
    const Mat2 B = hex_basis();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            y.values.push_back(field.displacement(B * Vec2{double(i) / m - 0.5, double(j) / m - 0.5}));
    return y;
}

/// L^2 gradient delta F / delta X = -div(grad_F(nabla X)) on the quadrature
/// grid, computed as the exact gradient of the discretized energy: grad_F at
/// the nodes, pulled back by B^{-T}, divergence by the adjoint of the
/// spectral differentiation (which is -D). Regime violations name the first
/// offending nodes.
inline GridVectorField variational_gradient(const DeformationField& field, int m = 64,
                                            double phi_min = kDefaultPhiMin) {
    if (field.kind() == DeformationField::Kind::grid) m = std::max(m, field.grid_size());
    const GridVectorField y = sample_displacement(field, m);
    const auto D = spectral_diff_matrix(m);
    const auto grads = detail::spectral_node_gradients(y, D);
    const Mat2 Binv = hex_basis_inverse();

    std::vector<Mat2> H(grads.size());
    std::string bad;
    int bad_count = 0;
    for (std::size_t idx = 0; idx < grads.size(); ++idx) {
        try {
            H[idx] = grad_F(Mat2::identity() + grads[idx] * Binv, phi_min) * Binv.transpose();
        } catch (const regime_error& e) {
            if (++bad_count <= 4) {
                bad += " node(" + std::to_string(idx / m) + "," + std::to_string(idx % m) + ")";
            }
        }
    }
    if (bad_count > 0) {
        throw regime_error("variational_gradient: " + std::to_string(bad_count) +
                           " nodes outside the regime:" + bad);
    }

    GridVectorField g;
    g.m = m;
    g.values.assign(std::size_t(m) * m, Vec2{0.0, 0.0});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            Vec2 div{0.0, 0.0};
            for (int k = 0; k < m; ++k) {
                const Mat2& Hk1 = H[std::size_t(k) * m + j];
                const Mat2& Hk2 = H[std::size_t(i) * m + k];
                // column 1 differentiated along u1, column 2 along u2
                div += D[std::size_t(i) * m + k] * Vec2{Hk1.a11, Hk1.a21};
                div += D[std::size_t(j) * m + k] * Vec2{Hk2.a12, Hk2.a22};
            }
            g.at(i, j) = -div;
        }
    }
    return g;
}

} // namespace hexquant

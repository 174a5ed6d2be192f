#pragma once

#include <cmath>
#include <vector>

#include "hexquant/errors.hpp"
#include "hexquant/geometry.hpp"

namespace hexquant {

/// Basis of the unit hexagonal lattice L = Z e1 + Z e2.
inline Vec2 hex_e1() { return {1.0, 0.0}; }
inline Vec2 hex_e2() { return {0.5, std::sqrt(3.0) / 2.0}; }
/// Third lattice direction e12 = e1 - e2, also of unit length.
inline Vec2 hex_e12() { return {0.5, -std::sqrt(3.0) / 2.0}; }

/// Column matrix B = [e1 e2]; x = B u maps lattice coordinates to the plane.
inline Mat2 hex_basis() {
    return {1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0};
}

inline Mat2 hex_basis_inverse() {
    const double s = std::sqrt(3.0);
    return {1.0, -1.0 / s, 0.0, 2.0 / s};
}

/// Area of the fundamental domain Pi = {u1 e1 + u2 e2 : |u1|,|u2| <= 1/2}.
inline double area_pi() { return std::sqrt(3.0) / 2.0; }

/// Diameter of Pi (the long rhombus diagonal |e1 + e2|).
inline double diam_pi() { return std::sqrt(3.0); }

namespace detail {
/// Reduce a scalar to the half-open interval [-1/2, 1/2).
inline double wrap_half(double t) {
    double w = t - std::floor(t + 0.5);
    if (w >= 0.5) w -= 1.0; // guard against floor rounding at the boundary
    return w;
}
} // namespace detail

/// Hexagonal lattice scaled by epsilon = 1/n and its torus arithmetic. All
/// positions are kept in lattice units; epsilon only scales the point cloud
/// X(eps L), never the fundamental domain.
struct HexLattice {
    int n = 1;
    double epsilon = 1.0;
    Vec2 basis_e1 = hex_e1();
    Vec2 basis_e2 = hex_e2();

    explicit HexLattice(int n_) : n(n_), epsilon(1.0 / n_) {
        if (n_ < 1) throw geometry_error("HexLattice: n must be a positive integer");
    }

    /// Lattice coordinates u with x = u1 e1 + u2 e2.
    Vec2 to_lattice(Vec2 x) const { return hex_basis_inverse() * x; }
    Vec2 from_lattice(Vec2 u) const { return hex_basis() * u; }

    /// Canonical representative with lattice coordinates in [-1/2, 1/2)^2.
    Vec2 wrap_lattice(Vec2 u) const {
        return {detail::wrap_half(u.x1), detail::wrap_half(u.x2)};
    }
    Vec2 wrap(Vec2 x) const { return from_lattice(wrap_lattice(to_lattice(x))); }

    /// Shortest representative of x - y on the torus R^2 / L.
    Vec2 torus_delta(Vec2 x, Vec2 y) const {
        const Vec2 w = wrap(x - y);
        Vec2 best = w;
        double best2 = w.norm2();
        for (int l1 = -1; l1 <= 1; ++l1) {
            for (int l2 = -1; l2 <= 1; ++l2) {
                if (l1 == 0 && l2 == 0) continue;
                const Vec2 c = w + double(l1) * basis_e1 + double(l2) * basis_e2;
                const double c2 = c.norm2();
                if (c2 < best2) { best2 = c2; best = c; }
            }
        }
        return best;
    }

    double torus_distance(Vec2 x, Vec2 y) const { return torus_delta(x, y).norm(); }

    /// Lattice coordinates of the n^2 nodes eps(k1 e1 + k2 e2), one
    /// representative per torus class, in row-major (k1, k2) order.
    std::vector<Vec2> node_lattice_coords() const {
        std::vector<Vec2> out;
        out.reserve(std::size_t(n) * n);
        for (int k1 = 0; k1 < n; ++k1) {
            for (int k2 = 0; k2 < n; ++k2) {
                out.push_back(wrap_lattice({double(k1) / n, double(k2) / n}));
            }
        }
        return out;
    }
};

} // namespace hexquant

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hexquant/errors.hpp"

namespace hexquant {

struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double a, double b) : x1(a), x2(b) {}

    constexpr Vec2 operator+(Vec2 o) const { return {x1 + o.x1, x2 + o.x2}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x1 - o.x1, x2 - o.x2}; }
    constexpr Vec2 operator-() const { return {-x1, -x2}; }
    constexpr Vec2 operator*(double s) const { return {x1 * s, x2 * s}; }
    constexpr Vec2 operator/(double s) const { return {x1 / s, x2 / s}; }
    Vec2& operator+=(Vec2 o) { x1 += o.x1; x2 += o.x2; return *this; }
    Vec2& operator-=(Vec2 o) { x1 -= o.x1; x2 -= o.x2; return *this; }
    Vec2& operator*=(double s) { x1 *= s; x2 *= s; return *this; }

    double norm2() const { return x1 * x1 + x2 * x2; }
    double norm() const { return std::sqrt(norm2()); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x1, s * v.x2}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }

/// 2-D wedge product a ∧ b (signed parallelogram area).
constexpr double cross(Vec2 a, Vec2 b) { return a.x1 * b.x2 - a.x2 * b.x1; }

struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    constexpr Mat2() = default;
    constexpr Mat2(double m11, double m12, double m21, double m22)
        : a11(m11), a12(m12), a21(m21), a22(m22) {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr Mat2 operator+(const Mat2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    constexpr Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    constexpr Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    constexpr Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    constexpr Vec2 operator*(Vec2 v) const {
        return {a11 * v.x1 + a12 * v.x2, a21 * v.x1 + a22 * v.x2};
    }
    Mat2& operator+=(const Mat2& o) {
        a11 += o.a11; a12 += o.a12; a21 += o.a21; a22 += o.a22;
        return *this;
    }

    constexpr Mat2 transpose() const { return {a11, a21, a12, a22}; }
    constexpr double det() const { return a11 * a22 - a12 * a21; }
    constexpr double trace() const { return a11 + a22; }

    /// Cofactor matrix, the transpose of the adjugate: equals det(M) M^{-T}
    /// for invertible M and is linear in M in two dimensions.
    constexpr Mat2 cofactor() const { return {a22, -a21, -a12, a11}; }

    Mat2 inverse() const {
        const double d = det();
        if (d == 0.0) throw singular_error("Mat2::inverse: singular matrix");
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }

    double frobenius_norm2() const { return a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22; }
    double frobenius_norm() const { return std::sqrt(frobenius_norm2()); }
};

constexpr Mat2 operator*(double s, const Mat2& m) { return m * s; }

/// Frobenius inner product trace(A^T B).
constexpr double frobenius_dot(const Mat2& a, const Mat2& b) {
    return a.a11 * b.a11 + a.a12 * b.a12 + a.a21 * b.a21 + a.a22 * b.a22;
}

/// Outer product u ⊗ v = u v^T, so that trace(N (u ⊗ v)) = (N u | v).
constexpr Mat2 outer(Vec2 u, Vec2 v) {
    return {u.x1 * v.x1, u.x1 * v.x2, u.x2 * v.x1, u.x2 * v.x2};
}

/// Rotation by the angle pi/3 about the origin.
inline Mat2 rotation_pi_3() {
    const double s = std::sqrt(3.0) / 2.0;
    return {0.5, -s, s, 0.5};
}

// ---------------------------------------------------------------------------
// Convex polygons
// ---------------------------------------------------------------------------

/// Convex polygon with counterclockwise vertex order. Fewer than three
/// vertices marks an empty region (the result of a clip that removed
/// everything).
struct ConvexPolygon {
    std::vector<Vec2> vertices;

    bool empty() const { return vertices.size() < 3; }
    std::size_t size() const { return vertices.size(); }

    double area() const {
        double a = 0.0;
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            a += cross(vertices[i], vertices[(i + 1) % n]);
        }
        return 0.5 * a;
    }

    Vec2 centroid() const {
        const std::size_t n = vertices.size();
        double a = 0.0;
        Vec2 c{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p = vertices[i];
            const Vec2 q = vertices[(i + 1) % n];
            const double w = cross(p, q);
            a += w;
            c += (p + q) * w;
        }
        return c / (3.0 * a);
    }

    /// Strict interior test; `margin` > 0 demands clearance from every edge.
    bool contains(Vec2 p, double margin = 0.0) const {
        const std::size_t n = vertices.size();
        if (n < 3) return false;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = vertices[i];
            const Vec2 b = vertices[(i + 1) % n];
            if (cross(b - a, p - a) <= margin) return false;
        }
        return true;
    }
};

/// Validating factory: at least three vertices, counterclockwise, convex.
inline ConvexPolygon make_convex_polygon(std::vector<Vec2> vertices, double tol = 1e-12) {
    if (vertices.size() < 3) throw geometry_error("polygon needs at least 3 vertices");
    ConvexPolygon poly{std::move(vertices)};
    if (poly.area() <= 0.0) throw geometry_error("polygon vertices must be counterclockwise");
    const std::size_t n = poly.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly.vertices[i];
        const Vec2 b = poly.vertices[(i + 1) % n];
        const Vec2 c = poly.vertices[(i + 2) % n];
        if (cross(b - a, c - b) < -tol) throw geometry_error("polygon is not convex");
    }
    return poly;
}

inline ConvexPolygon regular_hexagon(Vec2 center, double circumradius, double phase = 0.0) {
    std::vector<Vec2> v;
    v.reserve(6);
    for (int k = 0; k < 6; ++k) {
        const double t = phase + k * (M_PI / 3.0);
        v.push_back(center + circumradius * Vec2{std::cos(t), std::sin(t)});
    }
    return ConvexPolygon{std::move(v)};
}

/// Second moment of a right triangle about the acute vertex adjacent to the
/// leg of length h: the triangle has legs h and l meeting at the right angle,
/// and the moment origin sits at the far end of the h leg.
///
/// Orientation convention: h is the leg collinear with the segment from the
/// moment origin to the right-angle vertex (cell center to edge midpoint in a
/// Voronoi cell), l is the other leg (half-edge).
inline double right_triangle_moment(double h, double l) {
    if (!(h > 0.0) || !(l > 0.0))
        throw geometry_error("right_triangle_moment: legs must be positive");
    return 0.25 * l * h * (h * h + l * l / 3.0);
}

namespace detail {

/// Signed version of the right-triangle moment used when the foot of the
/// perpendicular falls outside the edge segment: odd in the l coordinate.
inline double signed_right_triangle_moment(double h, double s) {
    return 0.25 * s * h * (h * h + s * s / 3.0);
}

} // namespace detail

/// Exact second moment ∫_poly |y - center|^2 dy by fan triangulation from
/// `center`, each fan triangle split into two right triangles at the foot of
/// the perpendicular from the center onto the edge.
inline double polygon_second_moment(const ConvexPolygon& poly, Vec2 center) {
    if (poly.empty()) throw geometry_error("polygon_second_moment: empty polygon");
    if (!poly.contains(center)) throw geometry_error("polygon_second_moment: center outside polygon");
    const std::size_t n = poly.vertices.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly.vertices[i];
        const Vec2 b = poly.vertices[(i + 1) % n];
        const Vec2 edge = b - a;
        const double len = edge.norm();
        if (len < 1e-300) continue;
        const Vec2 t = edge / len;
        const double sa = dot(a - center, t);
        const double sb = dot(b - center, t);
        const Vec2 foot = a + (dot(center - a, t)) * t;
        const double h = (foot - center).norm();
        if (h < 1e-300) continue; // center on the edge line, zero-area fan triangle
        total += detail::signed_right_triangle_moment(h, sb)
               - detail::signed_right_triangle_moment(h, sa);
    }
    return total;
}

/// Closed-form second moment about `center` as a polynomial in the vertex
/// coordinates (shoelace style). Validation path for polygon_second_moment.
inline double polygon_second_moment_shoelace(const ConvexPolygon& poly, Vec2 center) {
    if (poly.empty()) throw geometry_error("polygon_second_moment_shoelace: empty polygon");
    const std::size_t n = poly.vertices.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = poly.vertices[i] - center;
        const Vec2 q = poly.vertices[(i + 1) % n] - center;
        total += cross(p, q) * (p.norm2() + dot(p, q) + q.norm2());
    }
    return total / 12.0;
}

/// Intersection of `poly` with the half-plane {y : (y - point)·normal <= offset}.
/// Vertices within `tol` of the cut line count as on the line and are kept
/// once. An empty intersection is returned as an empty-marked polygon.
inline ConvexPolygon clip_halfplane(const ConvexPolygon& poly, Vec2 point, Vec2 normal,
                                    double offset, double tol = 1e-12) {
    if (poly.empty()) return poly;
    const std::size_t n = poly.vertices.size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = dot(poly.vertices[i] - point, normal) - offset;

    ConvexPolygon out;
    out.vertices.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const bool in_i = s[i] <= tol;
        const bool in_j = s[j] <= tol;
        if (in_i) out.vertices.push_back(poly.vertices[i]);
        if (in_i != in_j && std::abs(s[i]) > tol && std::abs(s[j]) > tol) {
            const double t = s[i] / (s[i] - s[j]);
            out.vertices.push_back(poly.vertices[i] + t * (poly.vertices[j] - poly.vertices[i]));
        }
    }
    // drop duplicates introduced by vertices lying on the cut line
    std::vector<Vec2> dedup;
    dedup.reserve(out.vertices.size());
    for (const Vec2& v : out.vertices) {
        if (dedup.empty() || (v - dedup.back()).norm() > tol) dedup.push_back(v);
    }
    while (dedup.size() >= 2 && (dedup.front() - dedup.back()).norm() <= tol) dedup.pop_back();
    out.vertices = std::move(dedup);
    if (out.vertices.size() < 3) out.vertices.clear();
    return out;
}

} // namespace hexquant

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "hexquant/errors.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/rng.hpp"

namespace hexquant {
namespace oracles {

/// Edge-midpoint quadrature on a triangle: exact for polynomial integrands of
/// degree <= 2, which covers every second-moment integrand in this library.
/// Independent of the closed-form right-triangle route.
template <typename F>
double triangle_quadrature(F&& f, Vec2 a, Vec2 b, Vec2 c) {
    const double area = 0.5 * std::abs(cross(b - a, c - a));
    return area / 3.0 *
           (f(0.5 * (a + b)) + f(0.5 * (b + c)) + f(0.5 * (c + a)));
}

/// Quadrature of |y - origin|^2 over a polygon by fan triangulation from its
/// centroid with the exact degree-2 rule per triangle.
inline double polygon_second_moment_quadrature(const ConvexPolygon& poly, Vec2 origin) {
    const Vec2 g = poly.centroid();
    double total = 0.0;
    const std::size_t n = poly.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        total += triangle_quadrature([&](Vec2 y) { return (y - origin).norm2(); }, g,
                                     poly.vertices[i], poly.vertices[(i + 1) % n]);
    }
    return total;
}

inline Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
    const double d = 2.0 * (a.x1 * (b.x2 - c.x2) + b.x1 * (c.x2 - a.x2) + c.x1 * (a.x2 - b.x2));
    if (d == 0.0) throw geometry_error("circumcenter: collinear points");
    const double a2 = a.norm2(), b2 = b.norm2(), c2 = c.norm2();
    return {(a2 * (b.x2 - c.x2) + b2 * (c.x2 - a.x2) + c2 * (a.x2 - b.x2)) / d,
            (a2 * (c.x1 - b.x1) + b2 * (a.x1 - c.x1) + c2 * (b.x1 - a.x1)) / d};
}

/// ∫ |y - A|^2 over the kite A, mid(AB), circumcenter(ABC), mid(AC): the
/// region whose closed form is the triangle-pair energy contribution.
inline double kite_second_moment_quadrature(Vec2 a, Vec2 b, Vec2 c) {
    const Vec2 o = circumcenter(a, b, c);
    const Vec2 k = 0.5 * (a + b);
    const Vec2 j = 0.5 * (a + c);
    auto f = [&](Vec2 y) { return (y - a).norm2(); };
    return triangle_quadrature(f, a, k, o) + triangle_quadrature(f, a, o, j);
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo estimate of ∫_poly |y - center|^2 dy via rejection sampling in
/// the bounding box.
inline MonteCarloEstimate polygon_second_moment_mc(const ConvexPolygon& poly, Vec2 center,
                                                   std::size_t samples, Rng& rng) {
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const Vec2& v : poly.vertices) {
        lo.x1 = std::min(lo.x1, v.x1);
        lo.x2 = std::min(lo.x2, v.x2);
        hi.x1 = std::max(hi.x1, v.x1);
        hi.x2 = std::max(hi.x2, v.x2);
    }
    const double box_area = (hi.x1 - lo.x1) * (hi.x2 - lo.x2);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec2 y{rng.uniform(lo.x1, hi.x1), rng.uniform(lo.x2, hi.x2)};
        const double f = poly.contains(y, -1e-15) ? (y - center).norm2() : 0.0;
        sum += f;
        sum2 += f * f;
    }
    const double mean = sum / double(samples);
    const double var = sum2 / double(samples) - mean * mean;
    MonteCarloEstimate est;
    est.value = mean * box_area;
    est.std_error = std::sqrt(std::max(var, 0.0) / double(samples)) * box_area;
    return est;
}

/// Random convex polygon: sorted angles on a wobbled circle around `center`.
inline ConvexPolygon random_convex_polygon(Rng& rng, Vec2 center, double radius, int max_sides = 9) {
    const int sides = 3 + int(rng.uniform() * (max_sides - 2));
    std::vector<double> angles(sides);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * M_PI);
    std::sort(angles.begin(), angles.end());
    // place vertices on a common circle so convexity is guaranteed
    std::vector<Vec2> v;
    v.reserve(sides);
    for (double a : angles) v.push_back(center + radius * Vec2{std::cos(a), std::sin(a)});
    // drop near-duplicate angles
    std::vector<Vec2> clean;
    for (const Vec2& p : v) {
        if (clean.empty() || (p - clean.back()).norm() > 1e-3 * radius) clean.push_back(p);
    }
    if (clean.size() < 3) return random_convex_polygon(rng, center, radius, max_sides);
    return ConvexPolygon{std::move(clean)};
}

/// Central finite difference of a scalar function of a scalar parameter.
template <typename F>
double central_difference(F&& f, double h = 1e-6) {
    return (f(h) - f(-h)) / (2.0 * h);
}

} // namespace oracles
} // namespace hexquant

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "hexquant/errors.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/lattice.hpp"

namespace hexquant {

enum class VoronoiMode { hexagon, general };

/// Periodic Voronoi tessellation of one period of a torus point set. Cells
/// are plane polygons unwrapped near their sites, so each site lies strictly
/// inside its own cell. In hexagon mode the ordered six lattice-neighbor
/// images are kept per site (the inputs of the per-cell energy formula).
struct VoronoiDiagram {
    HexLattice lattice{1};
    VoronoiMode mode = VoronoiMode::general;
    std::vector<Vec2> sites;                      // unwrapped representatives used for the cells
    std::vector<ConvexPolygon> cells;             // one per site, CCW
    std::vector<std::vector<int>> adjacency;      // indices of sites whose bisector bounds the cell
    std::vector<std::array<Vec2, 6>> hex_neighbors; // hexagon mode only, cyclic order

    double total_area() const {
        double a = 0.0;
        for (const ConvexPolygon& c : cells) a += c.area();
        return a;
    }
};

namespace detail {

/// Index offsets of the six lattice neighbors in cyclic (counterclockwise)
/// order: +e1, +e2, e2-e1, -e1, -e2, e1-e2.
inline const std::array<std::array<int, 2>, 6>& hex_neighbor_offsets() {
    static const std::array<std::array<int, 2>, 6> offs = {
        {{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};
    return offs;
}

/// Second-ring index offsets; their images must not cut a valid hexagonal cell.
inline const std::array<std::array<int, 2>, 12>& hex_second_ring_offsets() {
    static const std::array<std::array<int, 2>, 12> offs = {
        {{2, 0}, {0, 2}, {-2, 0}, {0, -2}, {2, -2}, {-2, 2},
         {1, 1}, {-1, -1}, {2, -1}, {-2, 1}, {1, -2}, {-1, 2}}};
    return offs;
}

/// Unwraps a canonical representative next to an expected position: returns
/// rep + l with l in L chosen so the result is the copy nearest to `expected`.
inline Vec2 unwrap_near(const HexLattice& lattice, Vec2 rep, Vec2 expected) {
    const Vec2 du = lattice.to_lattice(expected - rep);
    const Vec2 l{std::round(du.x1), std::round(du.x2)};
    return rep + lattice.from_lattice(l);
}

/// Polygon with per-edge source labels used during half-plane clipping. Edge
/// k starts at vertex k; labels identify which clipper produced the edge.
struct LabeledPolygon {
    std::vector<Vec2> vertices;
    std::vector<int> labels;

    bool empty() const { return vertices.size() < 3; }

    void clip_bisector(Vec2 site, Vec2 other, int label, double tol = 1e-12) {
        if (empty()) return;
        const Vec2 diff = other - site;
        const Vec2 mid = 0.5 * (site + other);
        const std::size_t n = vertices.size();
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = dot(vertices[i] - mid, diff);
        const double scale = diff.norm() * tol;

        std::vector<Vec2> nv;
        std::vector<int> nl;
        nv.reserve(n + 1);
        nl.reserve(n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            const bool in_i = s[i] <= scale;
            const bool in_j = s[j] <= scale;
            if (in_i) {
                nv.push_back(vertices[i]);
                nl.push_back(in_j ? labels[i] : label);
            }
            if (in_i != in_j && std::abs(s[i]) > scale && std::abs(s[j]) > scale) {
                const double t = s[i] / (s[i] - s[j]);
                const Vec2 p = vertices[i] + t * (vertices[j] - vertices[i]);
                if (in_i) {
                    // leaving: edge i keeps its label up to p, the cut edge starts at p
                    nl.back() = labels[i];
                    nv.push_back(p);
                    nl.push_back(label);
                } else {
                    // entering: the rest of edge i continues from p
                    nv.push_back(p);
                    nl.push_back(labels[i]);
                }
            }
        }
        // dedup near-coincident vertices, keeping the label of the outgoing edge
        std::vector<Vec2> dv;
        std::vector<int> dl;
        for (std::size_t i = 0; i < nv.size(); ++i) {
            if (dv.empty() || (nv[i] - dv.back()).norm() > tol) {
                dv.push_back(nv[i]);
                dl.push_back(nl[i]);
            } else {
                dl.back() = nl[i];
            }
        }
        while (dv.size() >= 2 && (dv.front() - dv.back()).norm() <= tol) {
            dv.pop_back();
            dl.pop_back();
        }
        vertices = std::move(dv);
        labels = std::move(dl);
        if (vertices.size() < 3) {
            vertices.clear();
            labels.clear();
        }
    }
};

inline LabeledPolygon bounding_box(Vec2 center, double halfwidth) {
    LabeledPolygon p;
    p.vertices = {center + Vec2{-halfwidth, -halfwidth}, center + Vec2{halfwidth, -halfwidth},
                  center + Vec2{halfwidth, halfwidth}, center + Vec2{-halfwidth, halfwidth}};
    p.labels = {-1, -1, -1, -1};
    return p;
}

inline void check_distinct_on_torus(const std::vector<Vec2>& points, const HexLattice& lattice) {
    const std::size_t n = points.size();
    // small point sets only ever reach the O(N^2) path in tests
    if (n <= 512) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (lattice.torus_distance(points[i], points[j]) < 1e-12)
                    throw geometry_error("voronoi_periodic: duplicate points on the torus");
        return;
    }
    std::vector<Vec2> wrapped(n);
    for (std::size_t i = 0; i < n; ++i) wrapped[i] = lattice.wrap_lattice(lattice.to_lattice(points[i]));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return wrapped[a].x1 < wrapped[b].x1 || (wrapped[a].x1 == wrapped[b].x1 && wrapped[a].x2 < wrapped[b].x2);
    });
    for (std::size_t i = 1; i < n; ++i) {
        if (lattice.torus_distance(points[order[i - 1]], points[order[i]]) < 1e-12)
            throw geometry_error("voronoi_periodic: duplicate points on the torus");
    }
}

} // namespace detail

/// Periodic Voronoi tessellation of one period.
///
/// Hexagon mode assumes points = X(eps L) in the HexLattice node order and
/// clips only the six perpendicular bisectors of the lattice-neighbor images;
/// the result is validated (six edges, site inside, no second-ring image
/// closer to any vertex) and a mode_violation_error names the first offending
/// site when the deformation is too large for the fast path.
///
/// General mode clips against every periodic image within torus distance
/// max(3 eps, 2 / sqrt 3) of the site, using the 3 x 3 tiling; this covers
/// every bisector that can reach a cell, because each cell is contained in
/// the hexagon cut out by the site's own lattice copies.
inline VoronoiDiagram voronoi_periodic(const std::vector<Vec2>& points, const HexLattice& lattice,
                                       VoronoiMode mode) {
    if (points.empty()) throw geometry_error("voronoi_periodic: no points");
    detail::check_distinct_on_torus(points, lattice);

    VoronoiDiagram dia;
    dia.lattice = lattice;
    dia.mode = mode;
    const std::size_t count = points.size();
    dia.sites.resize(count);
    dia.cells.resize(count);
    dia.adjacency.resize(count);

    if (mode == VoronoiMode::hexagon) {
        const int n = lattice.n;
        if (count != std::size_t(n) * n)
            throw geometry_error("voronoi_periodic: hexagon mode needs n^2 points in node order");
        dia.hex_neighbors.resize(count);
        const double eps = lattice.epsilon;
        for (int k1 = 0; k1 < n; ++k1) {
            for (int k2 = 0; k2 < n; ++k2) {
                const std::size_t idx = std::size_t(k1) * n + k2;
                const Vec2 node = lattice.from_lattice({double(k1) / n, double(k2) / n});
                const Vec2 site = detail::unwrap_near(lattice, points[idx], node);
                dia.sites[idx] = site;

                auto neighbor_at = [&](int o1, int o2) {
                    const int j1 = ((k1 + o1) % n + n) % n;
                    const int j2 = ((k2 + o2) % n + n) % n;
                    const Vec2 expected =
                        lattice.from_lattice({double(k1 + o1) / n, double(k2 + o2) / n});
                    return detail::unwrap_near(lattice, points[std::size_t(j1) * n + j2], expected);
                };

                detail::LabeledPolygon poly = detail::bounding_box(site, 1.5 * eps);
                std::array<Vec2, 6> nbrs;
                for (int j = 0; j < 6; ++j) {
                    const auto& o = detail::hex_neighbor_offsets()[j];
                    nbrs[j] = neighbor_at(o[0], o[1]);
                    poly.clip_bisector(site, nbrs[j], j);
                }
                dia.hex_neighbors[idx] = nbrs;

                auto violation = [&](const std::string& why) {
                    std::ostringstream os;
                    os << "voronoi_periodic: hexagon mode violated at site (" << k1 << "," << k2
                       << "): " << why << " (deformation too large for the fast path)";
                    return mode_violation_error(os.str());
                };
                if (poly.vertices.size() != 6)
                    throw violation("cell has " + std::to_string(poly.vertices.size()) +
                                    " edges instead of 6");
                ConvexPolygon cell{poly.vertices};
                if (!cell.contains(site)) throw violation("site left its cell");
                for (const auto& o : detail::hex_second_ring_offsets()) {
                    const Vec2 q = neighbor_at(o[0], o[1]);
                    for (const Vec2& v : cell.vertices) {
                        if ((v - q).norm2() - (v - site).norm2() < -1e-12)
                            throw violation("second-ring image cuts the cell");
                    }
                }
                dia.cells[idx] = std::move(cell);
                for (int j = 0; j < 6; ++j) {
                    const auto& o = detail::hex_neighbor_offsets()[j];
                    const int j1 = ((k1 + o[0]) % n + n) % n;
                    const int j2 = ((k2 + o[1]) % n + n) % n;
                    dia.adjacency[idx].push_back(j1 * n + j2);
                }
            }
        }
        return dia;
    }

    // general mode: gather all 3x3-tiling images, clip nearest first
    struct Image {
        Vec2 pos;
        int source;
    };
    std::vector<Image> images;
    images.reserve(count * 9);
    for (std::size_t i = 0; i < count; ++i) {
        const Vec2 rep = lattice.wrap(points[i]);
        for (int l1 = -1; l1 <= 1; ++l1)
            for (int l2 = -1; l2 <= 1; ++l2)
                images.push_back({rep + double(l1) * hex_e1() + double(l2) * hex_e2(), int(i)});
    }

    const double reach = std::max(3.0 * lattice.epsilon, 2.0 / std::sqrt(3.0));
    for (std::size_t i = 0; i < count; ++i) {
        const Vec2 site = lattice.wrap(points[i]);
        dia.sites[i] = site;
        std::vector<std::pair<double, const Image*>> cand;
        cand.reserve(64);
        for (const Image& im : images) {
            const double d = (im.pos - site).norm();
            if (d < 1e-12) continue; // the site's own central copy
            if (d <= reach) cand.emplace_back(d, &im);
        }
        std::sort(cand.begin(), cand.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        detail::LabeledPolygon poly = detail::bounding_box(site, 1.1);
        for (const auto& [d, im] : cand) {
            if (poly.empty()) break;
            // bisectors farther than every current vertex cannot cut
            double rmax = 0.0;
            for (const Vec2& v : poly.vertices) rmax = std::max(rmax, (v - site).norm());
            if (d > 2.0 * rmax + 1e-12) break;
            poly.clip_bisector(site, im->pos, im->source);
        }
        if (poly.empty()) throw geometry_error("voronoi_periodic: empty cell in general mode");
        ConvexPolygon cell{poly.vertices};
        if (!cell.contains(site))
            throw geometry_error("voronoi_periodic: site outside its cell in general mode");
        std::vector<int> adj;
        for (int lbl : poly.labels) {
            if (lbl >= 0 && std::find(adj.begin(), adj.end(), lbl) == adj.end()) adj.push_back(lbl);
        }
        dia.cells[i] = std::move(cell);
        dia.adjacency[i] = std::move(adj);
    }
    return dia;
}

/// Optimal quantization masses for the uniform density: m_i proportional to
/// the cell areas, normalized to sum to one.
inline std::vector<double> optimal_masses(const VoronoiDiagram& diagram) {
    std::vector<double> m;
    m.reserve(diagram.cells.size());
    for (const ConvexPolygon& c : diagram.cells) m.push_back(c.area() / area_pi());
    return m;
}

} // namespace hexquant

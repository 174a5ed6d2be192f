#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <thread>
#include <vector>

#include "hexquant/deformation.hpp"
#include "hexquant/errors.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/lattice.hpp"
#include "hexquant/rng.hpp"
#include "hexquant/voronoi.hpp"

namespace hexquant {

/// Contribution of the triangle ABC to the quantization energy of the cell
/// centered at A: the two right triangles cut from the kite between A, the
/// circumcenter of ABC and the midpoints of AB, AC,
///
///   (1/192) |AB|^4 sqrt(q - 1) (q + 2)  +  (1/192) |AC|^4 sqrt(q' - 1) (q' + 2)
///
/// with q = |CB|^2 |CA|^2 / |CA ^ CB|^2 and q' = |BC|^2 |BA|^2 / |BA ^ BC|^2.
/// Valid when the circumcenter lies inside ABC (always the case for small
/// deformations of the hexagonal lattice).
inline double cell_energy_triangles(Vec2 a, Vec2 b, Vec2 c) {
    const Vec2 ab = b - a, ac = c - a;
    const Vec2 ca = a - c, cb = b - c;
    const Vec2 ba = a - b, bc = c - b;
    const double wedge = cross(ca, cb); // equals cross(ba, bc) up to sign
    const double wedge2 = wedge * wedge;
    if (wedge2 < 1e-28 * ab.norm2() * ac.norm2())
        throw geometry_error("cell_energy_triangles: collinear vertices");
    const double q = cb.norm2() * ca.norm2() / wedge2;
    const double qp = bc.norm2() * ba.norm2() / wedge2;
    if (q <= 1.0 + 1e-14 || qp <= 1.0 + 1e-14)
        throw geometry_error("cell_energy_triangles: degenerate geometry (q <= 1)");
    const double t1 = ab.norm2() * ab.norm2() * std::sqrt(q - 1.0) * (q + 2.0);
    const double t2 = ac.norm2() * ac.norm2() * std::sqrt(qp - 1.0) * (qp + 2.0);
    return (t1 + t2) / 192.0;
}

/// Exact quantization energy of one cell, ∫_cell |y - site|^2 dy. Hexagon
/// mode sums the six triangle-pair contributions around the site; general
/// mode integrates the polygon directly. The two routes agree to 1e-10 on
/// admissible configurations.
inline double cell_energy(const VoronoiDiagram& diagram, std::size_t site_index) {
    if (site_index >= diagram.cells.size())
        throw geometry_error("cell_energy: site index out of range");
    if (diagram.mode == VoronoiMode::hexagon) {
        const Vec2 a = diagram.sites[site_index];
        const auto& nbrs = diagram.hex_neighbors[site_index];
        double total = 0.0;
        for (int j = 0; j < 6; ++j) total += cell_energy_triangles(a, nbrs[j], nbrs[(j + 1) % 6]);
        return total;
    }
    return polygon_second_moment(diagram.cells[site_index], diagram.sites[site_index]);
}

/// Per-period quantization functional Q_{N,2} for the uniform density:
/// ∫ over one period of dist(y, X(eps L))^2 dy, as the sum of cell energies.
inline double quantization_energy(const VoronoiDiagram& diagram) {
    double total = 0.0;
    for (std::size_t i = 0; i < diagram.cells.size(); ++i) total += cell_energy(diagram, i);
    return total;
}

inline double quantization_energy(const DeformationField& field, const HexLattice& lattice,
                                  VoronoiMode mode = VoronoiMode::hexagon) {
    return quantization_energy(voronoi_periodic(sample_points(field, lattice), lattice, mode));
}

// ---------------------------------------------------------------------------
// Nearest-site queries over the periodic tiling
// ---------------------------------------------------------------------------

/// Uniform bucket grid over the 3x3 periodic tiling of one period's sites.
/// Queries wrap to the central tile first, so lookups never leave the grid.
class NearestSiteGrid {
  public:
    NearestSiteGrid(const std::vector<Vec2>& sites, const HexLattice& lattice)
        : lattice_(lattice) {
        points_.reserve(sites.size() * 9);
        for (const Vec2& s : sites) {
            const Vec2 rep = lattice.wrap(s);
            for (int l1 = -1; l1 <= 1; ++l1)
                for (int l2 = -1; l2 <= 1; ++l2)
                    points_.push_back(rep + double(l1) * hex_e1() + double(l2) * hex_e2());
        }
        lo_ = {1e300, 1e300};
        Vec2 hi{-1e300, -1e300};
        for (const Vec2& p : points_) {
            lo_.x1 = std::min(lo_.x1, p.x1);
            lo_.x2 = std::min(lo_.x2, p.x2);
            hi.x1 = std::max(hi.x1, p.x1);
            hi.x2 = std::max(hi.x2, p.x2);
        }
        lo_ -= Vec2{1e-9, 1e-9};
        hi += Vec2{1e-9, 1e-9};
        const int target = std::max(1, int(std::sqrt(double(points_.size()))));
        nx_ = ny_ = std::min(512, target * 2);
        hx_ = (hi.x1 - lo_.x1) / nx_;
        hy_ = (hi.x2 - lo_.x2) / ny_;
        buckets_.assign(std::size_t(nx_) * ny_, {});
        for (std::size_t i = 0; i < points_.size(); ++i) {
            buckets_[bucket_of(points_[i])].push_back(std::uint32_t(i));
        }
    }

    /// Squared distance from y to the nearest site image (periodic distance
    /// to the point cloud).
    double nearest_dist2(Vec2 y) const {
        const Vec2 q = lattice_.wrap(y);
        const int bx = clampi(int((q.x1 - lo_.x1) / hx_), 0, nx_ - 1);
        const int by = clampi(int((q.x2 - lo_.x2) / hy_), 0, ny_ - 1);
        double best = 1e300;
        for (int ring = 0;; ++ring) {
            bool any = false;
            for (int ix = bx - ring; ix <= bx + ring; ++ix) {
                for (int iy = by - ring; iy <= by + ring; ++iy) {
                    if (std::max(std::abs(ix - bx), std::abs(iy - by)) != ring) continue;
                    if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) continue;
                    any = true;
                    for (std::uint32_t pi : buckets_[std::size_t(ix) * ny_ + iy]) {
                        best = std::min(best, (points_[pi] - q).norm2());
                    }
                }
            }
            // certified once the next ring cannot contain anything closer
            const double guard = double(ring) * std::min(hx_, hy_);
            if (best < guard * guard) break;
            if (!any && ring > nx_ + ny_) break;
        }
        return best;
    }

  private:
    static int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

    std::size_t bucket_of(Vec2 p) const {
        const int ix = clampi(int((p.x1 - lo_.x1) / hx_), 0, nx_ - 1);
        const int iy = clampi(int((p.x2 - lo_.x2) / hy_), 0, ny_ - 1);
        return std::size_t(ix) * ny_ + iy;
    }

    HexLattice lattice_;
    std::vector<Vec2> points_;
    std::vector<std::vector<std::uint32_t>> buckets_;
    Vec2 lo_;
    int nx_ = 1, ny_ = 1;
    double hx_ = 1.0, hy_ = 1.0;
};

// ---------------------------------------------------------------------------
// Ball-averaged functional
// ---------------------------------------------------------------------------

struct BallAverageResult {
    double value = 0.0;        // (1/(pi L^2)) ∫_{B(0,L)} dist(y, X_eps)^2 dy
    double std_error = 0.0;    // Monte-Carlo standard error of `value`
    std::size_t samples = 0;
    double radius = 0.0;
};

/// Stratified Monte-Carlo estimate of the disk-averaged quantization density
/// (1/(pi L^2)) G_{eps,L}. Samples are stratified in polar coordinates (area
/// element made uniform via r = L sqrt(v)), with `replicates` independent
/// passes providing the standard-error estimate. Deterministic for a fixed
/// seed regardless of `threads` (replicates have independent streams and are
/// combined in index order). Requires L > diam(X(Pi)).
inline BallAverageResult ball_average(const DeformationField& field, const HexLattice& lattice,
                                      double radius, std::size_t samples,
                                      std::uint64_t seed = 2026, int replicates = 8,
                                      int threads = 1) {
    const double diam = diam_pi() + 2.0 * w1inf_norm(field, 32);
    if (!(radius > diam)) {
        std::ostringstream os;
        os << "ball_average: radius " << radius << " must exceed diam(X(Pi)) ~ " << diam;
        throw geometry_error(os.str());
    }
    const NearestSiteGrid grid(sample_points(field, lattice), lattice);

    const int reps = std::max(1, replicates);
    const int strata = std::max(4, int(std::sqrt(double(samples) / reps)));
    std::vector<double> means(reps, 0.0);
    auto run_replicate = [&](int r) {
        Rng rng(seed + std::uint64_t(r) * 0x9e3779b97f4a7c15ull);
        double acc = 0.0;
        for (int i = 0; i < strata; ++i) {
            for (int j = 0; j < strata; ++j) {
                const double v = (i + rng.uniform()) / strata;
                const double th = 2.0 * M_PI * (j + rng.uniform()) / strata;
                const double rr = radius * std::sqrt(v);
                acc += grid.nearest_dist2({rr * std::cos(th), rr * std::sin(th)});
            }
        }
        means[r] = acc / (double(strata) * strata);
    };
    const int workers = std::max(1, std::min(threads, reps));
    if (workers == 1) {
        for (int r = 0; r < reps; ++r) run_replicate(r);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int r = w; r < reps; r += workers) run_replicate(r);
            });
        }
        for (std::thread& t : pool) t.join();
    }
    const std::size_t used = std::size_t(strata) * strata * std::size_t(reps);
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= reps;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var = reps > 1 ? var / (reps - 1) : 0.0;

    BallAverageResult res;
    res.value = mean; // mean of dist^2 over the disk = (1/pi L^2) * integral
    res.std_error = std::sqrt(var / reps);
    res.samples = used;
    res.radius = radius;
    return res;
}

/// Both candidate large-L limits of the ball average: the per-period integral
/// as printed in the convergence statement, and the same integral divided by
/// |Pi| (the per-unit-area density, which is what the average actually
/// approaches in lattice units).
struct BallAverageReference {
    double per_period_integral = 0.0;  // ∫_{X(Pi)} dist^2 dy
    double per_unit_area = 0.0;        // previous / |Pi|
};

inline BallAverageReference ball_average_reference(const DeformationField& field,
                                                   const HexLattice& lattice) {
    BallAverageReference ref;
    ref.per_period_integral = quantization_energy(field, lattice);
    ref.per_unit_area = ref.per_period_integral / area_pi();
    return ref;
}

} // namespace hexquant

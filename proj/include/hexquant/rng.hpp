#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "hexquant/geometry.hpp"

namespace hexquant {

/// Seeded random source with explicit bit-to-double mappings. mt19937_64 is
/// fully specified by the standard and the mappings below avoid the
/// implementation-defined std::*_distribution, so identical seeds give
/// identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via polar Marsaglia.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    /// Uniform in the closed disk of radius r.
    Vec2 in_disk(double r) {
        const double rho = r * std::sqrt(uniform());
        const double th = 2.0 * M_PI * uniform();
        return {rho * std::cos(th), rho * std::sin(th)};
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace hexquant

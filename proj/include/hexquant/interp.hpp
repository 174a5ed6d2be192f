#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "hexquant/errors.hpp"

namespace hexquant {

/// Trigonometric interpolation of real m x m periodic samples f(j,l) given at
/// v = (j/m, l/m), period 1 in both directions. Even-m Nyquist modes use the
/// balanced cosine convention, so node derivatives coincide with the standard
/// spectral differentiation matrix.
class TrigInterpolant2D {
  public:
    TrigInterpolant2D() = default;

    /// `samples` row-major: samples[j*m + l] = f(j/m, l/m).
    TrigInterpolant2D(int m, const std::vector<double>& samples) : m_(m) {
        if (m < 1 || samples.size() != std::size_t(m) * m)
            throw geometry_error("TrigInterpolant2D: bad sample count");
        coef_.assign(std::size_t(m) * m, {0.0, 0.0});
        // separable DFT, rows then columns
        std::vector<std::complex<double>> tmp(std::size_t(m) * m);
        const double w = -2.0 * M_PI / m;
        for (int j = 0; j < m; ++j) {
            for (int b = 0; b < m; ++b) {
                std::complex<double> acc{0.0, 0.0};
                for (int l = 0; l < m; ++l) {
                    acc += samples[std::size_t(j) * m + l] *
                           std::complex<double>(std::cos(w * b * l), std::sin(w * b * l));
                }
                tmp[std::size_t(j) * m + b] = acc;
            }
        }
        for (int b = 0; b < m; ++b) {
            for (int a = 0; a < m; ++a) {
                std::complex<double> acc{0.0, 0.0};
                for (int j = 0; j < m; ++j) {
                    acc += tmp[std::size_t(j) * m + b] *
                           std::complex<double>(std::cos(w * a * j), std::sin(w * a * j));
                }
                coef_[std::size_t(a) * m + b] = acc / double(std::size_t(m) * m);
            }
        }
    }

    int size() const { return m_; }

    double value(double v1, double v2) const { return sum(v1, v2, 0, 0); }
    double deriv1(double v1, double v2) const { return sum(v1, v2, 1, 0); }
    double deriv2(double v1, double v2) const { return sum(v1, v2, 0, 1); }

  private:
    // Per-dimension basis: psi_a(v) = exp(2 pi i k_a v) for |k_a| < m/2,
    // cos(pi m v) for the even-m Nyquist index a = m/2.
    std::complex<double> basis(int a, double v, int order) const {
        const bool nyquist = (m_ % 2 == 0) && (a == m_ / 2);
        if (nyquist) {
            const double t = M_PI * m_ * v;
            return {order == 0 ? std::cos(t) : -M_PI * m_ * std::sin(t), 0.0};
        }
        const int k = (a <= m_ / 2) ? a : a - m_;
        const double t = 2.0 * M_PI * k * v;
        std::complex<double> e{std::cos(t), std::sin(t)};
        if (order == 1) e *= std::complex<double>(0.0, 2.0 * M_PI * k);
        return e;
    }

    double sum(double v1, double v2, int d1, int d2) const {
        std::complex<double> acc{0.0, 0.0};
        std::vector<std::complex<double>> b2(m_);
        for (int b = 0; b < m_; ++b) b2[b] = basis(b, v2, d2);
        for (int a = 0; a < m_; ++a) {
            const std::complex<double> ba = basis(a, v1, d1);
            std::complex<double> row{0.0, 0.0};
            for (int b = 0; b < m_; ++b) row += coef_[std::size_t(a) * m_ + b] * b2[b];
            acc += ba * row;
        }
        return acc.real();
    }

    int m_ = 0;
    std::vector<std::complex<double>> coef_;
};

/// Periodic cubic spline through values f(j) at v = j/m, period 1.
class PeriodicCubicSpline1D {
  public:
    PeriodicCubicSpline1D() = default;

    explicit PeriodicCubicSpline1D(std::vector<double> values) : f_(std::move(values)) {
        const int m = int(f_.size());
        if (m < 3) throw geometry_error("PeriodicCubicSpline1D: need at least 3 samples");
        const double h = 1.0 / m;
        // second derivatives M solve the cyclic tridiagonal system
        //   M[j-1] + 4 M[j] + M[j+1] = 6 (f[j+1] - 2 f[j] + f[j-1]) / h^2
        std::vector<double> rhs(m);
        for (int j = 0; j < m; ++j) {
            rhs[j] = 6.0 * (f_[(j + 1) % m] - 2.0 * f_[j] + f_[(j + m - 1) % m]) / (h * h);
        }
        m2_ = solve_cyclic(rhs);
    }

    double value(double v) const { return eval(v, 0); }
    double deriv(double v) const { return eval(v, 1); }

  private:
    // Sherman-Morrison for the cyclic system with diagonal 4 and off-diagonals 1.
    std::vector<double> solve_cyclic(const std::vector<double>& rhs) const {
        const int m = int(rhs.size());
        auto tridiag = [m](std::vector<double> d, std::vector<double> b) {
            std::vector<double> c(m, 1.0);
            for (int i = 1; i < m; ++i) {
                const double w = 1.0 / d[i - 1];
                d[i] -= w * c[i - 1];
                b[i] -= w * b[i - 1];
            }
            std::vector<double> x(m);
            x[m - 1] = b[m - 1] / d[m - 1];
            for (int i = m - 2; i >= 0; --i) x[i] = (b[i] - c[i] * x[i + 1]) / d[i];
            return x;
        };
        const double gamma = -4.0;
        std::vector<double> d(m, 4.0);
        d[0] -= gamma;
        d[m - 1] -= 1.0 / gamma;
        std::vector<double> u(m, 0.0);
        u[0] = gamma;
        u[m - 1] = 1.0;
        const std::vector<double> y = tridiag(d, rhs);
        const std::vector<double> z = tridiag(d, u);
        const double fact = (y[0] + y[m - 1] / gamma) / (1.0 + z[0] + z[m - 1] / gamma);
        std::vector<double> x(m);
        for (int i = 0; i < m; ++i) x[i] = y[i] - fact * z[i];
        return x;
    }

    double eval(double v, int order) const {
        const int m = int(f_.size());
        const double h = 1.0 / m;
        double t = v - std::floor(v); // [0,1)
        int j = int(std::floor(t * m));
        if (j >= m) j = m - 1;
        const double a = t - double(j) * h;      // offset into the interval
        const double A = (h - a) / h, B = a / h; // linear weights
        const int j1 = (j + 1) % m;
        if (order == 0) {
            return A * f_[j] + B * f_[j1] +
                   ((A * A * A - A) * m2_[j] + (B * B * B - B) * m2_[j1]) * h * h / 6.0;
        }
        return (f_[j1] - f_[j]) / h -
               (3.0 * A * A - 1.0) * h * m2_[j] / 6.0 + (3.0 * B * B - 1.0) * h * m2_[j1] / 6.0;
    }

    std::vector<double> f_;
    std::vector<double> m2_;
};

/// Tensor-product periodic bicubic interpolation of m x m samples at
/// v = (j/m, l/m). Evaluation rebuilds one column spline, O(m) per point.
class BicubicInterpolant2D {
  public:
    BicubicInterpolant2D() = default;

    BicubicInterpolant2D(int m, const std::vector<double>& samples) : m_(m) {
        if (m < 3 || samples.size() != std::size_t(m) * m)
            throw geometry_error("BicubicInterpolant2D: bad sample count");
        rows_.reserve(m);
        for (int j = 0; j < m; ++j) {
            std::vector<double> row(samples.begin() + std::size_t(j) * m,
                                    samples.begin() + std::size_t(j + 1) * m);
            rows_.emplace_back(std::move(row));
        }
    }

    int size() const { return m_; }

    double value(double v1, double v2) const { return along_v1(v1, v2, 0, 0); }
    double deriv1(double v1, double v2) const { return along_v1(v1, v2, 1, 0); }
    double deriv2(double v1, double v2) const { return along_v1(v1, v2, 0, 1); }

  private:
    double along_v1(double v1, double v2, int d1, int d2) const {
        std::vector<double> col(m_);
        for (int j = 0; j < m_; ++j) {
            col[j] = d2 == 0 ? rows_[j].value(v2) : rows_[j].deriv(v2);
        }
        const PeriodicCubicSpline1D s(std::move(col));
        return d1 == 0 ? s.value(v1) : s.deriv(v1);
    }

    int m_ = 0;
    std::vector<PeriodicCubicSpline1D> rows_;
};

/// Spectral differentiation matrix for period-1 samples at v = j/m: node
/// derivatives of the balanced trigonometric interpolant. Real and
/// antisymmetric, which makes its adjoint available as -D.
inline std::vector<double> spectral_diff_matrix(int m) {
    std::vector<double> D(std::size_t(m) * m, 0.0);
    for (int j = 0; j < m; ++j) {
        for (int l = 0; l < m; ++l) {
            if (j == l) continue;
            const int d = j - l;
            const double sign = (d % 2 == 0) ? 1.0 : -1.0;
            double v;
            if (m % 2 == 0) {
                v = sign * M_PI / std::tan(M_PI * d / double(m));
            } else {
                v = sign * M_PI / std::sin(M_PI * d / double(m));
            }
            D[std::size_t(j) * m + l] = v;
        }
    }
    return D;
}

} // namespace hexquant

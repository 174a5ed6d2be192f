#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hexquant/continuum_energy.hpp"
#include "hexquant/deformation.hpp"
#include "hexquant/oracles.hpp"
#include "hexquant/rng.hpp"

using namespace hexquant;

namespace {
Mat2 random_ball(Rng& rng, double radius) {
    Mat2 U{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    return Mat2::identity() + U * (radius * rng.uniform() / U.frobenius_norm());
}
} // namespace

TEST_CASE("shape factor Phi") {
    SECTION("identity value 1/sqrt3 for every direction") {
        for (const Vec2& e : energy_directions()) {
            CHECK(phi(e, Mat2::identity()) ==
                  Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
        }
    }
    SECTION("scale invariance") {
        Rng rng(1);
        for (int i = 0; i < 20; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            CHECK(phi(hex_e1(), M * 2.0) == Catch::Approx(phi(hex_e1(), M)).epsilon(1e-13));
            CHECK(phi(hex_e2(), M * 0.5) == Catch::Approx(phi(hex_e2(), M)).epsilon(1e-13));
        }
    }
    SECTION("rotation covariance Phi(Re, M) = Phi(e, R^T M R)") {
        Rng rng(2);
        const Mat2 R = rotation_pi_3();
        for (int i = 0; i < 20; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            for (const Vec2& e : energy_directions()) {
                CHECK(phi(R * e, M) ==
                      Catch::Approx(phi(e, R.transpose() * M * R)).epsilon(1e-12));
            }
        }
    }
    SECTION("singular matrix is rejected") {
        CHECK_THROWS_AS(phi(hex_e1(), Mat2{1, 1, 1, 1}), singular_error);
    }
}

TEST_CASE("Phi closed forms near the identity") {
    CHECK(phi_closed_form_e1(Mat2::identity()) ==
          Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));

    const Mat2 D{1.0, 0.0, 0.0, 1.1};
    CHECK(phi_closed_form_e1(D) == Catch::Approx(phi(hex_e1(), D)).epsilon(1e-12));

    SECTION("all three forms match the definition on the regime domain") {
        Rng rng(3);
        for (int i = 0; i < 50; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            CHECK(phi_closed_form_e1(M) == Catch::Approx(phi(hex_e1(), M)).epsilon(1e-12));
            CHECK(phi_closed_form_e2(M) == Catch::Approx(phi(hex_e2(), M)).epsilon(1e-12));
            CHECK(phi_closed_form_e12(M) == Catch::Approx(phi(hex_e12(), M)).epsilon(1e-12));
        }
    }
    SECTION("rotated arguments reproduce the e2 / e12 variants") {
        Rng rng(4);
        const Mat2 R = rotation_pi_3();
        for (int i = 0; i < 20; ++i) {
            const Mat2 M = random_ball(rng, 0.08);
            CHECK(phi_closed_form_e2(M) ==
                  Catch::Approx(phi_closed_form_e1(R.transpose() * M * R)).epsilon(1e-12));
            CHECK(phi_closed_form_e12(M) ==
                  Catch::Approx(phi_closed_form_e1(R * M * R.transpose())).epsilon(1e-12));
        }
    }
    SECTION("far-from-identity matrices violate the sign condition") {
        CHECK_THROWS_AS(phi_closed_form_e1(Mat2{1, 0, 0, -1}), regime_error);
    }
}

TEST_CASE("energy density") {
    const double ref = 10.0 / (48.0 * std::sqrt(3.0));
    CHECK(energy_density(Mat2::identity()) == Catch::Approx(ref).epsilon(1e-15));

    SECTION("degree-4 homogeneity") {
        Rng rng(5);
        for (int i = 0; i < 30; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            const double f = energy_density(M);
            CHECK(energy_density(M * 2.0) == Catch::Approx(16.0 * f).epsilon(1e-12));
            CHECK(energy_density(M * 0.5) == Catch::Approx(f / 16.0).epsilon(1e-12));
        }
        CHECK(energy_density(Mat2::identity() * 1.01) ==
              Catch::Approx(std::pow(1.01, 4) * ref).epsilon(1e-13));
    }
}

TEST_CASE("polynomial P and the Q split") {
    CHECK(polynomial_P(1, 0, 0, 1) == 20.0);
    CHECK(polynomial_P(1, 1, 0, 1) == 17.0);

    SECTION("P = 96 sqrt3 det(M) F(M)") {
        Rng rng(6);
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            const double p = polynomial_P(M.a11, M.a12, M.a21, M.a22);
            const double f = 96.0 * std::sqrt(3.0) * M.det() * energy_density(M);
            CHECK(p == Catch::Approx(f).epsilon(1e-10));
        }
    }
    SECTION("Q+- by direct evaluation") {
        // t = 2, det = 1: Q+ = 2 (24 - 4) = 40; s = 0 kills Q-
        const auto [qp0, qm0] = q_plus_minus(1, 0, 0, 1);
        CHECK(qp0 == 40.0);
        CHECK(qm0 == 0.0);
        const auto [qp1, qm1] = q_plus_minus(1, 1, 0, 1);
        CHECK(qp1 == 45.0);
        CHECK(qm1 == -11.0);
        CHECK(0.5 * (qp1 + qm1) == 17.0);
        // s = 0 whenever alpha^2 + gamma^2 = beta^2 + delta^2
        CHECK(q_plus_minus(1, 2, 2, 1).second == 0.0);
    }
    SECTION("P = (Q+ + Q-)/2") {
        Rng rng(7);
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            const auto [qp, qm] = q_plus_minus(M.a11, M.a12, M.a21, M.a22);
            CHECK(polynomial_P(M.a11, M.a12, M.a21, M.a22) ==
                  Catch::Approx(0.5 * (qp + qm)).epsilon(1e-10));
        }
    }
}

TEST_CASE("the published trace form carries a sign defect") {
    const double s96 = 96.0 * std::sqrt(3.0);
    // as printed: -16/(96 sqrt3) at the identity, against the true 20/(96 sqrt3)
    CHECK(trace_form_as_printed(Mat2::identity()) * s96 == Catch::Approx(-16.0).epsilon(1e-12));
    CHECK(trace_form_corrected(Mat2::identity()) * s96 == Catch::Approx(20.0).epsilon(1e-12));
    CHECK(energy_density(Mat2::identity()) * s96 == Catch::Approx(20.0).epsilon(1e-12));

    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const Mat2 M = random_ball(rng, 0.05);
        CHECK(trace_form_corrected(M) == Catch::Approx(energy_density(M)).epsilon(1e-10));
    }
}

TEST_CASE("Taylor expansion of the energy density") {
    CHECK(taylor_F(Mat2{}, 0.0, 1) ==
          Catch::Approx(10.0 / (48.0 * std::sqrt(3.0))).epsilon(1e-15));

    SECTION("N = I recovers the homogeneity series through cubic order") {
        const double eps = 0.01;
        const double ref = (10.0 + 40.0 * eps + 60.0 * eps * eps + 40.0 * eps * eps * eps) /
                           (48.0 * std::sqrt(3.0));
        CHECK(taylor_F(Mat2::identity(), eps, 3) == Catch::Approx(ref).epsilon(1e-14));
    }
    SECTION("remainder after the cubic term is fourth order") {
        Rng rng(9);
        for (int trial = 0; trial < 5; ++trial) {
            Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            N = N * (1.0 / N.frobenius_norm());
            std::vector<double> xs, ys;
            for (double le = -1.0; le >= -3.01; le -= 0.5) {
                const double eps = std::pow(10.0, le);
                const double res =
                    std::abs(energy_density(Mat2::identity() + N * eps) - taylor_F(N, eps, 3));
                xs.push_back(std::log(eps));
                ys.push_back(std::log(res));
            }
            CHECK(fit_line(xs, ys).slope >= 3.8);
        }
    }
    SECTION("order argument is validated") {
        CHECK_THROWS_AS(taylor_F(Mat2::identity(), 0.1, 4), geometry_error);
    }
}

TEST_CASE("A tensor") {
    SECTION("explicit value at (e1, I)") {
        const Mat2 A = A_tensor(hex_e1(), Mat2::identity());
        CHECK((A - Mat2{-0.5, 0.0, 0.0, 0.5}).frobenius_norm() < 1e-14);
        CHECK(std::abs(A.trace()) < 1e-14);
    }
    SECTION("degree -1 homogeneity") {
        Rng rng(10);
        for (int i = 0; i < 20; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            const Mat2 a = A_tensor(hex_e2(), M);
            CHECK((A_tensor(hex_e2(), M * 2.0) * 2.0 - a).frobenius_norm() < 1e-13);
        }
    }
    SECTION("singular matrix is rejected") {
        CHECK_THROWS_AS(A_tensor(hex_e1(), Mat2{0, 0, 0, 0}), singular_error);
    }
}

TEST_CASE("directional derivative of Phi") {
    SECTION("finite-difference oracle on the demanded ball") {
        Rng rng(11);
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            const Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
            for (const Vec2& e : energy_directions()) {
                const double an = dphi(e, M, N, 0.25);
                const double fd =
                    oracles::central_difference([&](double t) { return phi(e, M + N * t); });
                CHECK(std::abs(an - fd) <= 1e-8 * std::max(1.0, std::abs(fd)));
            }
        }
    }
    SECTION("scaling direction gives zero (degree-0 homogeneity)") {
        Rng rng(12);
        const Mat2 M = random_ball(rng, 0.05);
        CHECK(std::abs(dphi(hex_e1(), M, M)) < 1e-12);
    }
    SECTION("matches the symbolic derivative of the closed form at I") {
        CHECK(dphi(hex_e1(), Mat2::identity(), Mat2{1, 0, 0, -1}) ==
              Catch::Approx(-4.0 / std::sqrt(3.0)).epsilon(1e-13));
    }
    SECTION("guard rejects small Phi") {
        // diag(1, t) with t near 1/sqrt3 drives Phi(e1, .) toward zero
        CHECK_THROWS_AS(dphi(hex_e1(), Mat2{1, 0, 0, 0.6}, Mat2::identity()), regime_error);
    }
}

TEST_CASE("matrix gradient of the energy density") {
    SECTION("finite-difference oracle") {
        Rng rng(13);
        for (int i = 0; i < 100; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            const Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
            const double an = frobenius_dot(grad_F(M, 0.25), N);
            const double fd = oracles::central_difference(
                [&](double t) { return energy_density(M + N * t); }, 1e-5);
            CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
    SECTION("gradient at the identity") {
        const Mat2 g = grad_F(Mat2::identity());
        CHECK((g - Mat2::identity() * (5.0 / (12.0 * std::sqrt(3.0)))).frobenius_norm() < 1e-12);
    }
    SECTION("Euler relation for degree-4 homogeneity") {
        Rng rng(14);
        for (int i = 0; i < 50; ++i) {
            const Mat2 M = random_ball(rng, 0.1);
            CHECK(frobenius_dot(grad_F(M, 0.25), M) ==
                  Catch::Approx(4.0 * energy_density(M)).epsilon(1e-10));
        }
    }
}

TEST_CASE("energy functional") {
    SECTION("identity: F(I) |Pi| = 5/48") {
        CHECK(energy_functional(DeformationField::identity(), 16) ==
              Catch::Approx(5.0 / 48.0).epsilon(1e-14));
    }
    SECTION("quadrature refinement is spectrally converged") {
        const DeformationField f = random_band_limited_field(0.02, 15);
        CHECK(std::abs(energy_functional(f, 48) - energy_functional(f, 96)) < 1e-10);
    }
}

TEST_CASE("variational gradient") {
    SECTION("zero at the identity, mean zero in general") {
        const GridVectorField g0 = variational_gradient(DeformationField::identity(), 16);
        for (const Vec2& v : g0.values) CHECK(v.norm() < 1e-12);
        const GridVectorField g =
            variational_gradient(random_band_limited_field(0.02, 16), 24);
        CHECK(g.mean().norm() < 1e-13);
    }
    SECTION("Gateaux difference quotient") {
        for (int trial = 0; trial < 3; ++trial) {
            const DeformationField X = random_band_limited_field(0.02, 700 + trial);
            DeformationField Y = random_band_limited_field(0.01, 800 + trial);
            const int m = 24;
            Y = add_scaled(DeformationField::identity(), Y,
                           1.0 / sample_displacement(Y, m).l2_norm());
            const GridVectorField g = variational_gradient(X, m);
            const double pairing = GridVectorField::l2_dot(g, sample_displacement(Y, m));
            const double tau = 1e-6;
            const double fd = (energy_functional(add_scaled(X, Y, tau), m) -
                               energy_functional(add_scaled(X, Y, -tau), m)) /
                              (2.0 * tau);
            CHECK(std::abs(pairing - fd) <= 1e-6 * std::max(std::abs(fd), g.l2_norm()));
        }
    }
    SECTION("matches the exact gradient of the sampled functional") {
        const DeformationField X = random_band_limited_field(0.02, 900);
        const int m = 16;
        CHECK(energy_functional_sampled(sample_displacement(X, m)) ==
              Catch::Approx(energy_functional(X, m)).epsilon(1e-13));
    }
    SECTION("grid-kind fields give the same gradient as their generator") {
        const DeformationField X = random_band_limited_field(0.02, 901);
        const int m = 24;
        const GridVectorField a = variational_gradient(X, m);
        const GridVectorField b = variational_gradient(to_grid_field(X, m), m);
        REQUIRE(a.values.size() == b.values.size());
        for (std::size_t i = 0; i < a.values.size(); ++i)
            CHECK((a.values[i] - b.values[i]).norm() < 1e-12);
    }
    SECTION("resolution refinement converges to the continuum divergence") {
        // the discrete adjoint gradient at the coarse nodes settles once the
        // grid resolves the smooth integrand, so doubling m barely moves it
        const DeformationField X = random_band_limited_field(0.02, 902);
        const int m = 24;
        const GridVectorField coarse = variational_gradient(X, m);
        const GridVectorField fine = variational_gradient(X, 2 * m);
        double gmax = 0.0, diff = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                gmax = std::max(gmax, coarse.at(i, j).norm());
                diff = std::max(diff, (coarse.at(i, j) - fine.at(2 * i, 2 * j)).norm());
            }
        }
        CHECK(diff <= 1e-9 * std::max(1.0, gmax));
    }
}

TEST_CASE("convexified density F0") {
    const double s3 = std::sqrt(3.0);

    SECTION("near-identity expansion") {
        Rng rng(17);
        for (int i = 0; i < 20; ++i) {
            const Mat2 N{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
            const double eps = 1e-4;
            const double quad = (F0(Mat2::identity() + N * eps) +
                                 F0(Mat2::identity() - N * eps) - 2.0 * F0(Mat2::identity())) /
                                (eps * eps);
            const double ref = 2.0 * (5.0 / (24.0 * s3) * N.trace() * N.trace() +
                                      1.0 / (16.0 * s3) * N.frobenius_norm2());
            CHECK(quad == Catch::Approx(ref).margin(1e-5 * std::max(1.0, ref)));
        }
    }
    SECTION("Hessian Rayleigh bound at I") {
        const auto eig = hessian_F0_eigenvalues(Mat2::identity());
        double mn = 1e300;
        for (double e : eig) mn = std::min(mn, e);
        CHECK(mn >= 1.0 / (8.0 * s3) - 1e-6);
    }
    SECTION("functional of F0 equals the functional of F") {
        for (int i = 0; i < 5; ++i) {
            const DeformationField f = random_band_limited_field(0.02, 950 + i);
            CHECK(energy_functional_F0(f, 48) ==
                  Catch::Approx(energy_functional(f, 48)).epsilon(1e-9));
        }
    }
    SECTION("gradient subtracts the null-Lagrangian terms") {
        Rng rng(18);
        const Mat2 M = random_ball(rng, 0.05);
        const Mat2 diff = grad_F(M) - grad_F0(M);
        const Mat2 ref = Mat2::identity() * (5.0 / (12.0 * s3)) +
                         (M - Mat2::identity()).cofactor() * (7.0 / (24.0 * s3));
        CHECK((diff - ref).frobenius_norm() < 1e-13);
    }
}

TEST_CASE("globally convex extension G") {
    const ConvexifiedEnergy ce = estimate_coercivity();
    CHECK(ce.lambda == Catch::Approx(1.0 / (8.0 * std::sqrt(3.0))).epsilon(1e-12));
    CHECK(ce.rho0 > 0.0);
    CHECK(ce.rho0 <= 0.2);
    CHECK(ce.Lambda >= ce.lambda);

    const ConvexifiedG G(ce);
    SECTION("equals F0 inside half the blend radius") {
        Rng rng(19);
        for (int i = 0; i < 20; ++i) {
            Mat2 U{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
            U = U * (0.45 * G.blend_radius() / U.frobenius_norm());
            const Mat2 M = Mat2::identity() + U;
            CHECK(G.value(M) == F0(M));
        }
    }
    SECTION("far field sits in the quadratic envelope") {
        const Mat2 A = Mat2{0.3, -0.8, 0.5, 0.1} * 10.0;
        const double base = 5.0 / (24.0 * std::sqrt(3.0));
        const double v = G.value(Mat2::identity() + A);
        CHECK(v >= base + 0.25 * ce.lambda * A.frobenius_norm2());
        CHECK(v <= base + ce.Lambda * A.frobenius_norm2());
    }
    SECTION("sampled Hessian respects the global bounds") {
        const auto rep = G.hessian_bounds_report(1234, 150);
        CHECK(rep.pass);
        CHECK(rep.min_eig >= 0.5 * ce.lambda - 1e-6);
        CHECK(rep.max_eig <= 2.0 * ce.Lambda + 1e-6);
    }
    SECTION("Hessian at the identity keeps the coercivity bound") {
        const auto eig = symmetric_eigenvalues(
            hessian_matrix([&](const Mat2& X) { return G.gradient(X); }, Mat2::identity()), 4);
        double mn = 1e300;
        for (double e : eig) mn = std::min(mn, e);
        CHECK(mn >= ce.lambda - 1e-6);
    }
}

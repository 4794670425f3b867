#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "dotlead/zeta.hpp"

using namespace dotlead;

TEST_CASE("zeta1 band-edge and closed-form values") {
    CHECK(zeta1(2.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(zeta1(-2.0) == Catch::Approx(-1.0).margin(1e-15));
    CHECK(zeta1(3.0) == Catch::Approx((3.0 - std::sqrt(5.0)) / 2.0).margin(1e-15));
    CHECK(zeta1(10.0) == Catch::Approx(5.0 - 2.0 * std::sqrt(6.0)).margin(1e-15));
    // 1/z + 1/z^3 asymptote
    CHECK(zeta1(1000.0) == Catch::Approx(0.001000001).margin(1e-12));
    CHECK(std::abs(zeta1(cplx{1e6, 0.0})) < 1.1e-6);
}

TEST_CASE("zeta1 rejects band-interior real arguments") {
    CHECK_THROWS_AS(zeta1(cplx{0.5, 0.0}), std::domain_error);
    CHECK_THROWS_AS(zeta1(1.999), std::domain_error);
    CHECK_NOTHROW(zeta1_edge(0.5, Side::above));
}

TEST_CASE("zeta1 quadratic identity on sampled points") {
    std::mt19937 rng(20240901);
    std::uniform_real_distribution<double> mag(std::log(2.05), std::log(80.0));
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double r = std::exp(mag(rng));
        const double a = ang(rng);
        cplx z{r * std::cos(a), r * std::sin(a)};
        if (std::abs(z.imag()) < 1e-12 && std::abs(z.real()) < 2.0) z += cplx{0.0, 0.1};
        const cplx zt = zeta1(z);
        worst = std::max(worst, std::abs(zt + 1.0 / zt - z));
        CHECK(std::abs(zt) < 1.0);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("zeta1 oddness and boundary values") {
    for (double x : {2.3, 5.0, 17.0}) CHECK(zeta1(-x) == Catch::Approx(-zeta1(x)).margin(1e-15));
    const cplx z{3.0, 1.5};
    const cplx d = zeta1(-z) + zeta1(z);
    CHECK(std::abs(d) < 1e-14);

    for (double e : {-1.9, -0.7, 0.0, 0.3, 1.95}) {
        const cplx za = zeta1_edge(e, Side::above);
        CHECK(std::abs(za) == Catch::Approx(1.0).margin(1e-14));
        // Im <0|(h - E - i0)^{-1}|0> = Im(-zeta1(E+i0)) > 0
        CHECK((-za).imag() > 0.0);
        CHECK(zeta1_edge(e, Side::below) == std::conj(za));
        // quadratic identity survives on the band
        CHECK(std::abs(za + 1.0 / za - e) < 1e-13);
    }
    CHECK(std::abs(zeta1_edge(2.0, Side::above) - 1.0) < 1e-15);
    CHECK(std::abs(zeta1_edge(-2.0, Side::below) + 1.0) < 1e-15);
}

TEST_CASE("zeta1 derivative matches finite differences") {
    for (double x : {2.5, 4.0, 12.0, -3.0}) {
        const double h = 1e-6;
        const double fd = (zeta1(x + h) - zeta1(x - h)) / (2.0 * h);
        CHECK(zeta1_deriv(x) == Catch::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("lead resolvent surface and telescoped elements") {
    CHECK(lead_resolvent_at(0, 0, cplx{3.0, 0.0}).real() ==
          Catch::Approx(-0.3819660).margin(1e-7));
    const double z3 = zeta1(3.0);
    CHECK(lead_resolvent_at(1, 0, cplx{3.0, 0.0}).real() ==
          Catch::Approx(-z3 * z3).margin(1e-14));
    CHECK(std::abs(lead_resolvent_at(2, 5, cplx{1e6, 0.0})) < 1e-20);
    // symmetry
    const cplx z{2.7, 0.4};
    CHECK(std::abs(lead_resolvent_at(3, 6, z) - lead_resolvent_at(6, 3, z)) < 1e-15);
}

TEST_CASE("lead resolvent agrees with a dense truncated inverse") {
    const int n = 80;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) h(i, i + 1) = h(i + 1, i) = 1.0;
    for (cplx z : {cplx{3.0, 0.0}, cplx{-2.5, 0.0}, cplx{1.0, 0.8}}) {
        Eigen::MatrixXcd m = h - z * Eigen::MatrixXcd::Identity(n, n);
        Eigen::MatrixXcd inv = m.inverse();
        double worst = 0.0;
        for (int a = 0; a < 12; ++a)
            for (int b = 0; b < 12; ++b)
                worst = std::max(worst, std::abs(inv(a, b) - lead_resolvent_at(a, b, z)));
        CHECK(worst < 1e-10);
    }
}

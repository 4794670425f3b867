#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dotlead/spectral.hpp"

using namespace dotlead;

namespace {

// Test-side oracle: direct long-double evaluation of the secular function and
// plain bisection, independent of the library's stabilized forms.
long double zeta_oracle(long double x) {
    const long double a = std::abs(x);
    const long double z = (a - std::sqrt(a * a - 4.0L)) / 2.0L;
    return x < 0 ? -z : z;
}

long double g_oracle(long double x, long double v, long double e0, long double tau) {
    return e0 - x + tau * tau * (zeta_oracle(x - v) + zeta_oracle(x));
}

long double bisect_oracle(long double lo, long double hi, long double v, long double e0,
                          long double tau) {
    for (int i = 0; i < 220; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (g_oracle(mid, v, e0, tau) > 0.0L) lo = mid;
        else hi = mid;
    }
    return 0.5L * (lo + hi);
}

long double critical_oracle_vc1(long double e0, long double tau) {
    long double lo = 4.0L, hi = e0 + 4.0L;
    for (int i = 0; i < 220; ++i) {
        const long double mid = 0.5L * (lo + hi);
        const long double g = e0 - 2.0L - mid + tau * tau * (1.0L + zeta_oracle(mid + 2.0L));
        if (g > 0.0L) lo = mid;
        else hi = mid;
    }
    return 0.5L * (lo + hi);
}

long double critical_oracle_vc2(long double e0, long double tau) {
    long double lo = e0 - 1.0L, hi = e0 + 4.0L;
    for (int i = 0; i < 220; ++i) {
        const long double mid = 0.5L * (lo + hi);
        const long double g = e0 + 2.0L - mid + tau * tau * (-1.0L + zeta_oracle(mid - 2.0L));
        if (g > 0.0L) lo = mid;
        else hi = mid;
    }
    return 0.5L * (lo + hi);
}

const ModelParams ref{10.0, 0.1};

} // namespace

TEST_CASE("model parameter invariants are enforced") {
    CHECK_THROWS_AS(ModelParams(5.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(10.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(10.0, 1.5), std::invalid_argument);
    CHECK_NOTHROW(ModelParams(12.0, -0.3));
}

TEST_CASE("g_function reference values") {
    // E0=10, tau=0.1, v=0, z=12
    const cplx g = g_function(cplx{12.0, 0.0}, 0.0, ref);
    CHECK(g.real() == Catch::Approx(-1.998325).margin(1e-5));
    const double exact = 10.0 - 12.0 + 0.01 * 2.0 * zeta1(12.0);
    CHECK(g.real() == Catch::Approx(exact).margin(1e-14));
    CHECK(g.imag() == 0.0);

    // decoupled limit
    const ModelParams tiny{10.0, 1e-7};
    CHECK(std::abs(g_function(cplx{4.0, 1.0}, 3.0, tiny) - (10.0 - cplx{4.0, 1.0})) < 1e-12);
}

TEST_CASE("critical biases against the oracle") {
    const CriticalBiases vc = critical_biases(ref);
    CHECK(vc.vc1 == Catch::Approx(8.01101).margin(1e-4));
    CHECK(vc.vc2 == Catch::Approx(11.99101).margin(1e-4));
    CHECK(vc.vc1 ==
          Catch::Approx(static_cast<double>(critical_oracle_vc1(10.0L, 0.1L))).margin(1e-12));
    CHECK(vc.vc2 ==
          Catch::Approx(static_cast<double>(critical_oracle_vc2(10.0L, 0.1L))).margin(1e-12));
    CHECK(4.0 < vc.vc1);
    CHECK(vc.vc1 < vc.vc2);
    // G vanishes at the moving edge for v = vc1
    CHECK(std::abs(g_function(2.0 + vc.vc1, vc.vc1, ref)) < 1e-10);

    // decoupled limit: vc1 -> E0-2, vc2 -> E0+2
    const ModelParams tiny{10.0, 1e-6};
    const CriticalBiases vt = critical_biases(tiny);
    CHECK(vt.vc1 == Catch::Approx(8.0).margin(1e-10));
    CHECK(vt.vc2 == Catch::Approx(12.0).margin(1e-10));
}

TEST_CASE("find_eigenvalue matches the bisection oracle") {
    const CriticalBiases vc = critical_biases(ref);

    const auto e0 = find_eigenvalue(0.0, ref, vc);
    REQUIRE(e0.has_value());
    CHECK(e0->lambda == Catch::Approx(10.00202).margin(1e-5));
    CHECK(e0->lambda ==
          Catch::Approx(static_cast<double>(bisect_oracle(10.0L, 12.0L, 0.0L, 10.0L, 0.1L)))
              .margin(1e-11));
    CHECK(e0->interval == BoundInterval::above_left_band);

    CHECK_FALSE(find_eigenvalue(10.0, ref, vc).has_value());

    const auto e13 = find_eigenvalue(13.0, ref, vc);
    REQUIRE(e13.has_value());
    CHECK(e13->lambda == Catch::Approx(9.99719).margin(1e-5));
    CHECK(e13->lambda ==
          Catch::Approx(static_cast<double>(bisect_oracle(9.0L, 10.5L, 13.0L, 10.0L, 0.1L)))
              .margin(1e-11));
    CHECK(e13->interval == BoundInterval::between_bands);
    CHECK(e13->lambda > 2.0);
    CHECK(e13->lambda < 11.0);
}

TEST_CASE("G is strictly decreasing on the allowed intervals") {
    for (double v : {0.0, 5.0, 9.0, 13.0}) {
        const CriticalBiases vc = critical_biases(ref);
        std::vector<std::pair<double, double>> ranges;
        ranges.push_back({v + 2.0 + 0.05, v + 2.0 + 8.0});
        ranges.push_back({-10.0, -2.05});
        if (v > 4.0) ranges.push_back({2.05, v - 2.05});
        for (auto [a, b] : ranges) {
            const int n = 40;
            for (int i = 0; i + 1 < n; ++i) {
                const double x0 = a + (b - a) * i / n;
                const double x1 = a + (b - a) * (i + 1) / n;
                const double slope = (g_function(x1, v, ref) - g_function(x0, v, ref)) / (x1 - x0);
                CHECK(slope <= -1.0 + 1e-9);
            }
        }
    }
}

TEST_CASE("bound state components and normalization") {
    const BoundState b = bound_state(0.0, ref);
    CHECK(b.psi_dot * b.psi_dot == Catch::Approx(0.999794).margin(2e-6));
    CHECK(b.psi_dot > 0.0);
    CHECK(std::abs(b.decay_left) < 1.0);
    CHECK(std::abs(b.decay_right) < 1.0);
    // norm from the geometric series
    double n2 = b.psi_dot * b.psi_dot;
    for (int m = 0; m < 2000; ++m) {
        n2 += b.left_amp(m) * b.left_amp(m) + b.right_amp(m) * b.right_amp(m);
    }
    CHECK(n2 == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(g_function(b.lambda, b.v, ref)) < 1e-10);

    // second regime: oscillating decay on the left lead
    const BoundState b13 = bound_state(13.0, ref);
    CHECK(b13.decay_left < 0.0);
    CHECK(b13.interval == BoundInterval::between_bands);
    double n13 = b13.psi_dot * b13.psi_dot;
    for (int m = 0; m < 2000; ++m)
        n13 += b13.left_amp(m) * b13.left_amp(m) + b13.right_amp(m) * b13.right_amp(m);
    CHECK(n13 == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("dot weight delocalizes monotonically toward the threshold") {
    const CriticalBiases vc = critical_biases(ref);
    double prev = 1.0;
    for (int j = 0; j <= 6; ++j) {
        const double v = vc.vc1 - 1e-4 * std::pow(2.0, -j);
        const BoundState b = bound_state(v, ref, vc);
        const double w = b.psi_dot * b.psi_dot;
        CHECK(w < prev);
        prev = w;
    }
    CHECK(prev < 0.05);
}

TEST_CASE("threshold proximity floors") {
    const CriticalBiases vc = critical_biases(ref);
    CHECK_THROWS(bound_state(vc.vc1 - 1e-7, ref, vc));
    CHECK_THROWS(bound_state(vc.vc2 + 1e-7, ref, vc));
    CHECK_NOTHROW(bound_state(vc.vc1 - 1e-5, ref, vc));
}

TEST_CASE("threshold data: gap equals t^2 and the quadratic law sets in") {
    const CriticalBiases vc = critical_biases(ref);
    const ThresholdData td = threshold_data(8.0, ref, vc);
    CHECK(td.gap == Catch::Approx(td.t_of_v * td.t_of_v).margin(1e-14));
    CHECK(td.gap > 0.0);

    // Quadratic scaling window: |v - vc1| well below tau^4, where the
    // linearization t ~ (vc1 - v)/tau^2 of the edge equation holds.
    std::vector<double> xs, ys;
    for (int j = 0; j <= 4; ++j) {
        const double d = 8e-7 * std::pow(2.0, -j);
        const ThresholdData t = threshold_data(vc.vc1 - d, ref, vc);
        xs.push_back(std::log(d));
        ys.push_back(std::log(t.gap));
    }
    // least-squares slope
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double n = static_cast<double>(xs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == Catch::Approx(2.0).margin(0.05));
}

TEST_CASE("projection matrix elements") {
    // geometric decay in m at fixed bias
    const double p5 = projection_matrix_element(5, Lead::right, 0.0, ref);
    const double p6 = projection_matrix_element(6, Lead::right, 0.0, ref);
    const BoundState b = bound_state(0.0, ref);
    CHECK(p6 / p5 == Catch::Approx(b.decay_right * b.decay_right).margin(1e-12));

    // threshold scaling of <0_-|P_d|0_->: inside the scaling window the
    // value is ~ 2 t(v), so quartering the distance roughly halves it.
    const CriticalBiases vc = critical_biases(ref);
    const double q1 = projection_matrix_element(0, Lead::left, vc.vc1 - 2.5e-5, ref);
    const double q2 = projection_matrix_element(0, Lead::left, vc.vc1 - 1.0e-4, ref);
    CHECK(q1 / q2 > 0.375);
    CHECK(q1 / q2 < 0.625);
}

TEST_CASE("resolvent column: poles, decoupled limit, dense oracle") {
    const CriticalBiases vc = critical_biases(ref);
    const auto ev = find_eigenvalue(0.0, ref, vc);
    CHECK_THROWS(resolvent_column_dot(cplx{ev->lambda, 0.0}, 0.0, ref));

    const ModelParams tiny{10.0, 1e-7};
    const ResolventColumn rc0 = resolvent_column_dot(cplx{12.0, 0.0}, 0.0, tiny);
    CHECK(std::abs(rc0.dot_coeff - 1.0 / (10.0 - 12.0)) < 1e-12);
    CHECK(std::abs(rc0.left_amp(0)) < 1e-6);

    // dense truncated solve, moderate size
    const int nl = 120;
    const int dim = 2 * nl + 1;
    const double v = 0.7;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i + 1 < dim; ++i) h(i, i + 1) = h(i + 1, i) = 1.0;
    h(nl - 1, nl) = h(nl, nl - 1) = ref.tau;
    h(nl, nl + 1) = h(nl + 1, nl) = ref.tau;
    for (int i = 0; i < nl; ++i) h(i, i) = v;
    h(nl, nl) = ref.e0;
    const cplx z{12.0, 0.0};
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim);
    rhs(nl) = 1.0;
    Eigen::VectorXcd col = (h - z * Eigen::MatrixXcd::Identity(dim, dim)).lu().solve(rhs);
    const ResolventColumn rc = resolvent_column_dot(z, v, ref);
    CHECK(std::abs(col(nl) - rc.dot_coeff) < 1e-10);
    for (int m = 0; m < 10; ++m) {
        CHECK(std::abs(col(nl - 1 - m) - rc.left_amp(m)) < 1e-10);
        CHECK(std::abs(col(nl + 1 + m) - rc.right_amp(m)) < 1e-10);
    }
}

TEST_CASE("projection asymptote tracks P_d at sqrt rate near vc1") {
    const CriticalBiases vc = critical_biases(ref);
    const int window = 20000;

    auto diff_norm = [&](double v) {
        const BoundState b = bound_state(v, ref, vc);
        const ProjectionAsymptote pa = projection_asymptote(v, ref, vc);
        // test vectors: |S>, |0_->, |3_->
        double worst = 0.0;
        for (int which = 0; which < 3; ++which) {
            // P_d x
            double amp_d = 0.0;  // <psi|x>
            if (which == 0) amp_d = b.psi_dot;
            if (which == 1) amp_d = b.left_amp(0);
            if (which == 2) amp_d = b.left_amp(3);
            // ||(P_d - P_a) x||^2: left-lead part + dot + right-lead part
            double acc = 0.0;
            const int xm = (which == 0) ? -1 : (which == 1 ? 0 : 3);
            for (int m = 0; m < window; ++m) {
                const double pd = amp_d * b.left_amp(m);
                const double pa_v = (xm >= 0) ? pa.element(m, xm) : 0.0;
                acc += (pd - pa_v) * (pd - pa_v);
            }
            acc += amp_d * amp_d * b.psi_dot * b.psi_dot;
            for (int m = 0; m < 200; ++m) acc += amp_d * amp_d * b.right_amp(m) * b.right_amp(m);
            worst = std::max(worst, std::sqrt(acc));
        }
        return worst;
    };

    std::vector<double> xs, ys;
    for (int j = 0; j < 4; ++j) {
        const double d = 1.6e-5 * std::pow(2.0, -j);
        xs.push_back(std::log(d));
        ys.push_back(std::log(diff_norm(vc.vc1 - d)));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double n = static_cast<double>(xs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    // finite-distance correction sqrt(1+2t/tau^2) pulls the fit below 1/2
    CHECK(slope > 0.38);
    CHECK(slope < 0.62);
}

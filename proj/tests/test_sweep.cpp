#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "dotlead/sweep.hpp"

using namespace dotlead;

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg;
    cfg.etas = {1e-2, 3e-2};  // not decreasing
    CHECK_THROWS(ExperimentConfig::validate(cfg));
    cfg.etas = {3e-2, 1e-2};
    cfg.deltas = {0.1, 0.4};
    CHECK_THROWS(ExperimentConfig::validate(cfg));
    cfg.deltas = {0.4, 0.1};
    CHECK_NOTHROW(ExperimentConfig::validate(cfg));
}

TEST_CASE("mini sweep: scenario 1 extrapolates toward f_eq(lambda(-1))", "[slow]") {
    ExperimentConfig cfg;
    cfg.scenarios = {1};
    cfg.etas = {3e-2, 1e-2};
    cfg.dt = 0.01;
    cfg.workers = 2;
    const SweepResult r = run(cfg);
    REQUIRE(r.rows.size() == 2);
    for (const auto& row : r.rows) {
        CHECK_FALSE(row.failed);
        CHECK(row.drift < 1e-8);
    }
    REQUIRE(r.summary.size() == 1);
    REQUIRE(r.summary[0].extrapolated.has_value());
    CHECK(r.summary[0].target == Catch::Approx(0.499495).margin(1e-6));
    CHECK(*r.summary[0].extrapolated == Catch::Approx(0.499495).margin(0.02));
}

TEST_CASE("flat occupation: every cell is 1 up to drift", "[slow]") {
    ExperimentConfig cfg;
    cfg.fermi = FermiSpec::constant(1.0);
    cfg.scenarios = {2};
    cfg.deltas = {0.4};
    cfg.etas = {3e-2, 1e-2};
    cfg.dt = 0.01;
    const SweepResult r = run(cfg);
    for (const auto& row : r.rows) {
        REQUIRE_FALSE(row.failed);
        CHECK(row.value == Catch::Approx(1.0).margin(1e-7));
    }
}

TEST_CASE("single-eta sweep has no extrapolation column") {
    ExperimentConfig cfg;
    cfg.scenarios = {1};
    cfg.etas = {1e-1};
    cfg.dt = 0.01;
    const SweepResult r = run(cfg);
    REQUIRE(r.summary.size() == 1);
    CHECK_FALSE(r.summary[0].extrapolated.has_value());
}

TEST_CASE("deterministic CSV bytes and header") {
    ExperimentConfig cfg;
    cfg.scenarios = {1};
    cfg.etas = {1e-1, 3e-2};
    cfg.dt = 0.01;
    const SweepResult a = run(cfg);
    const SweepResult b = run(cfg);
    const std::string ca = csv_text(a, /*fixed_timings=*/true);
    const std::string cb = csv_text(b, /*fixed_timings=*/true);
    CHECK(ca == cb);
    CHECK(ca.rfind("scenario,delta,eta,observable,value,drift,runtime_s\n", 0) == 0);
}

TEST_CASE("empty result yields a header-only CSV") {
    SweepResult empty;
    CHECK(csv_text(empty, true) == "scenario,delta,eta,observable,value,drift,runtime_s\n");
}

TEST_CASE("summary carries the three targets with notes") {
    ExperimentConfig cfg;
    cfg.scenarios = {1, 2, 3};
    cfg.deltas = {0.4};
    cfg.etas = {1e-1};
    cfg.dt = 0.01;
    const SweepResult r = run(cfg);
    REQUIRE(r.summary.size() == 3);
    CHECK(r.summary[0].target == Catch::Approx(0.499495).margin(1e-6));
    CHECK(r.summary[1].target == Catch::Approx(0.9996646).margin(1e-7));
    CHECK(r.summary[2].target == Catch::Approx(0.9999939).margin(1e-7));
    for (const auto& s : r.summary) CHECK_FALSE(s.target_note.empty());
    // crossing scenarios carry the stationary-route value
    REQUIRE(r.summary[1].scattering_route.has_value());
    REQUIRE(r.summary[2].scattering_route.has_value());
    CHECK(*r.summary[1].scattering_route == Catch::Approx(0.9996646).margin(2e-3));
    const std::string table = summary_text(r);
    CHECK(table.find("f_eq(2)") != std::string::npos);
    CHECK(table.find("f_eq(-2)") != std::string::npos);
}

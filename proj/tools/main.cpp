// Command-line driver: spectral diagnostics, single trajectories, the full
// (eta, delta) sweep harness, stationary scattering dumps, and the quick
// invariant suite.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "dotlead/sweep.hpp"

using namespace dotlead;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
};

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty())
        cfg = ExperimentConfig::from_config(ConfigFile::parse_file(args.config_path));
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

void write_file(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
}

int cmd_spectrum(const ExperimentConfig& cfg) {
    const CriticalBiases vc = critical_biases(cfg.params);
    std::string csv = "v,lambda,gap,psi_dot_sq,decay_left,decay_right\n";
    char line[256];
    for (int i = 0; i <= 300; ++i) {
        const double v = 16.0 * i / 300.0;
        const SpectrumRow r = spectrum_row(v, cfg.params, vc);
        if (!r.has_bound) continue;
        std::snprintf(line, sizeof(line), "%.8f,%.10f,%.6e,%.8f,%.8f,%.8f\n", r.v, r.lambda,
                      r.gap, r.psi_dot_sq, r.decay_left, r.decay_right);
        csv += line;
    }
    write_file(cfg.out_dir + "/spectrum.csv", csv);
    std::printf("vc1 = %.8f  (E0-2 distance %.3e)\n", vc.vc1, vc.vc1 - (cfg.params.e0 - 2.0));
    std::printf("vc2 = %.8f  (E0+2 distance %.3e)\n", vc.vc2, vc.vc2 - (cfg.params.e0 + 2.0));
    std::printf("wrote %s/spectrum.csv\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_evolve(const ExperimentConfig& cfg, int scenario, double delta, double eta) {
    const CriticalBiases vc = critical_biases(cfg.params);
    const BiasProfile prof = scenario_profile(scenario, vc, delta, cfg);
    const LatticeLayout lay = layout_for_window(1.0 / eta, cfg.layout_pad);
    PropagatorConfig pc(eta, cfg.dt_for(eta), lay);
    const ExpectationResult r =
        adiabatic_expectation(prof, cfg.params, cfg.fermi,
                              pc, parse_observable("bound_occupation", prof, cfg.params, vc, lay));
    std::printf("scenario %d  delta %.4g  eta %.4g\n", scenario, delta, eta);
    std::printf("<P_d(0)> = %.8f   drift %.2e   steps %ld   %.1fs\n", r.value, r.drift, r.steps,
                r.wall_seconds);
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, bool fixed_timings) {
    const SweepResult result = run(cfg);
    report_csv(result, cfg.out_dir + "/sweep.csv", fixed_timings || cfg.fixed_timings);
    report_summary(result, cfg.out_dir + "/summary.txt");
    std::fputs(summary_text(result).c_str(), stdout);
    int failures = 0;
    for (const auto& row : result.rows)
        if (row.failed) {
            ++failures;
            std::fprintf(stderr, "cell failed: scenario %d delta %.3g eta %.3g: %s\n",
                         row.scenario, row.delta, row.eta, row.error.c_str());
        }
    std::printf("wrote %s/sweep.csv and %s/summary.txt\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
    return failures == 0 ? 0 : 1;
}

int cmd_scatter(const ExperimentConfig& cfg, double delta) {
    const CriticalBiases vc = critical_biases(cfg.params);
    const double v = vc.vc1 + delta;
    const LatticeLayout lay(2048, 2048);
    const cvec psi =
        to_complex(bound_state_vector(bound_state(vc.vc1 - delta, cfg.params, vc), lay));
    const ChannelGrid grid = build_channel_grid(v, cfg.params);
    const auto rows = scatter_diagnostic(v, psi, cfg.fermi, cfg.params, lay, grid);
    std::string csv = "channel,eps,overlap_sq,fermi_weight\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%.10f,%.10e,%.10f\n",
                      r.channel == Channel::left ? "left" : "right", r.eps, r.overlap_sq,
                      r.fermi_weight);
        csv += line;
    }
    write_file(cfg.out_dir + "/scatter.csv", csv);
    const double m = memory_term(v, psi, cfg.fermi, cfg.params, lay, grid, vc);
    std::printf("memory term at v = vc1 + %.3g: %.8f  (f_eq(2) = %.8f)\n", delta, m,
                cfg.fermi(2.0));
    std::printf("wrote %s/scatter.csv\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_check(const ExperimentConfig& cfg) {
    int bad = 0;
    auto expect = [&](bool ok, const char* what) {
        std::printf("%s  %s\n", ok ? "[ok]  " : "[FAIL]", what);
        if (!ok) ++bad;
    };
    const ModelParams& p = cfg.params;
    const CriticalBiases vc = critical_biases(p);

    {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> mag(std::log(2.1), std::log(40.0));
        std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
        double worst = 0.0;
        for (int i = 0; i < 400; ++i) {
            const double r = std::exp(mag(rng)), a = ang(rng);
            cplx z{r * std::cos(a), r * std::sin(a)};
            if (std::abs(z.imag()) < 1e-9 && std::abs(z.real()) < 2.0) z += cplx{0.0, 0.2};
            const cplx zt = zeta1(z);
            worst = std::max(worst, std::abs(zt + 1.0 / zt - z));
        }
        expect(worst < 1e-12, "zeta1 quadratic identity");
    }
    {
        bool mono = true;
        for (int i = 0; i < 30; ++i) {
            const double x0 = 2.05 + 0.2 * i, x1 = x0 + 0.2;
            if ((g_function(x1, 0.0, p) - g_function(x0, 0.0, p)) / (x1 - x0) > -1.0 + 1e-9)
                mono = false;
        }
        expect(mono, "G slope <= -1 outside the bands");
    }
    expect(std::abs(g_function(2.0 + vc.vc1, vc.vc1, p)) < 1e-10, "G(2+vc1; vc1) = 0");
    {
        double dev = 0.0;
        for (int i = 1; i < 20; ++i) dev = std::max(dev, smatrix_unitarity_deviation(
                                                    -0.45 + 2.3 * i / 20.0, 1.5, p));
        expect(dev < 1e-10, "S-matrix unitarity (open channels)");
    }
    {
        const LatticeLayout lay(64, 64);
        std::mt19937 rng(99);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        cvec psi(lay.dim(), cplx{0.0, 0.0});
        psi[lay.dot_index()] = cplx{u(rng), u(rng)};
        for (int m = 0; m < 10; ++m) {
            psi[lay.left_index(m)] = cplx{u(rng), u(rng)};
            psi[lay.right_index(m)] = cplx{u(rng), u(rng)};
        }
        const double nn = vec_norm(psi);
        for (auto& c : psi) c /= nn;
        const double total =
            spectral_weight_total(10.0, p, psi, lay, build_channel_grid(10.0, p));
        expect(std::abs(total - 1.0) < 1e-6, "scattering completeness at v in (vc1,vc2)");
    }
    for (int scenario : {1, 2, 3}) {
        const BiasProfile prof = scenario_profile(scenario, vc, scenario == 1 ? 0.0 : 0.2, cfg);
        expect(validate(prof, vc).empty(), "profile invariants");
    }
    {
        const LatticeLayout lay = layout_for_window(10.0);
        const BiasProfile prof = make_scenario(ScenarioKind::smooth_no_crossing, vc);
        PropagatorConfig pc(0.1, 0.01, lay);
        cvec psi(lay.dim(), cplx{0.0, 0.0});
        psi[lay.dot_index()] = 1.0;
        const EvolutionResult r = evolve(prof, p, pc, 0.0, -10.0, psi);
        expect(r.drift < 1e-10, "CN unitarity");
    }
    std::printf(bad == 0 ? "all checks passed\n" : "%d check(s) failed\n", bad);
    return bad == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dot--two-lead adiabatic switching laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonArgs common;
    app.add_option("--config", common.config_path, "experiment config file");
    app.add_option("--out", common.out_dir, "output directory");

    auto* sp = app.add_subcommand("spectrum", "eigenvalue curve and critical biases");

    auto* ev = app.add_subcommand("evolve", "single adiabatic trajectory");
    int scenario = 1;
    double delta = 0.2, eta = 1e-2;
    ev->add_option("--scenario", scenario, "scenario 1, 2 or 3")->check(CLI::Range(1, 3));
    ev->add_option("--delta", delta, "jump half-gap for crossing scenarios");
    ev->add_option("--eta", eta, "adiabatic parameter");

    auto* sw = app.add_subcommand("sweep", "full (eta, delta) harness");
    bool fixed_timings = false;
    std::vector<double> etas, deltas;
    std::vector<int> scenarios;
    sw->add_flag("--fixed-timings", fixed_timings, "write runtime_s as 0.000 (byte-reproducible)");
    sw->add_option("--eta", etas, "override eta list");
    sw->add_option("--delta", deltas, "override delta list");
    sw->add_option("--scenario", scenarios, "override scenario list");
    int workers = 0;
    sw->add_option("--workers", workers, "worker threads");

    auto* sc = app.add_subcommand("scatter", "stationary scattering diagnostics");
    double sc_delta = 0.2;
    sc->add_option("--delta", sc_delta, "distance to vc1 on both sides");

    auto* ck = app.add_subcommand("check", "quick invariant suite");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(common);
        if (sp->parsed()) return cmd_spectrum(cfg);
        if (ev->parsed()) return cmd_evolve(cfg, scenario, delta, eta);
        if (sw->parsed()) {
            if (!etas.empty()) cfg.etas = etas;
            if (!deltas.empty()) cfg.deltas = deltas;
            if (!scenarios.empty()) cfg.scenarios = scenarios;
            if (workers > 0) cfg.workers = workers;
            return cmd_sweep(cfg, fixed_timings);
        }
        if (sc->parsed()) return cmd_scatter(cfg, sc_delta);
        if (ck->parsed()) return cmd_check(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

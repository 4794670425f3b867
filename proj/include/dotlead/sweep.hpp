#pragma once

// Scenario runner and convergence harness: (eta, delta) sweeps of the
// adiabatic expectations, linear eta-extrapolation, the stationary
// scattering cross-checks, and CSV / plain-table reports.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dotlead/config.hpp"
#include "dotlead/scattering.hpp"

namespace dotlead {

struct ExperimentConfig {
    ModelParams params{10.0, 0.1};
    FermiSpec fermi = FermiSpec::fermi(1.0, 10.0);
    std::vector<int> scenarios{1, 2, 3};
    std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};
    std::vector<double> etas{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    double dt = 0.01;
    bool scale_dt = true;  // dt_eff = dt * sqrt(eta/eta_max), capped below at dt/16
    int layout_pad = 64;
    std::vector<std::string> observables{"bound_occupation"};
    std::string out_dir = "out";
    int workers = 2;
    bool fixed_timings = false;
    double s_c = default_s_c;
    double s_c_prime = default_s_c_prime;

    double dt_for(double eta) const {
        if (!scale_dt || etas.empty()) return dt;
        const double eta_max = *std::max_element(etas.begin(), etas.end());
        return std::max(dt / 16.0, dt * std::sqrt(eta / eta_max));
    }

    static ExperimentConfig from_config(const ConfigFile& cf) {
        ExperimentConfig c;
        c.params = ModelParams(cf.get_double("model", "e0", 10.0),
                               cf.get_double("model", "tau", 0.1));
        if (cf.get("fermi", "mode", "fermi") == "constant") {
            c.fermi = FermiSpec::constant(cf.get_double("fermi", "value", 1.0));
        } else {
            c.fermi = FermiSpec::fermi(cf.get_double("fermi", "beta", 1.0),
                                       cf.get_double("fermi", "mu", 10.0));
        }
        const auto sc = cf.get_list("sweep", "scenarios", {1, 2, 3});
        c.scenarios.assign(sc.size(), 0);
        for (std::size_t i = 0; i < sc.size(); ++i) c.scenarios[i] = static_cast<int>(sc[i]);
        c.deltas = cf.get_list("sweep", "deltas", c.deltas);
        c.etas = cf.get_list("sweep", "etas", c.etas);
        c.dt = cf.get_double("sweep", "dt", c.dt);
        c.scale_dt = cf.get_bool("sweep", "scale_dt", c.scale_dt);
        c.layout_pad = cf.get_int("layout", "pad", c.layout_pad);
        c.workers = cf.get_int("sweep", "workers", c.workers);
        c.fixed_timings = cf.get_bool("sweep", "fixed_timings", c.fixed_timings);
        c.s_c = cf.get_double("profile", "s_c", c.s_c);
        c.s_c_prime = cf.get_double("profile", "s_c_prime", c.s_c_prime);
        c.out_dir = cf.get("output", "dir", c.out_dir);
        {
            std::stringstream ss(cf.get("sweep", "observables", "bound_occupation"));
            std::string tok;
            c.observables.clear();
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) c.observables.push_back(tok);
            }
        }
        validate(c);
        return c;
    }

    static void validate(const ExperimentConfig& c) {
        for (std::size_t i = 1; i < c.etas.size(); ++i)
            if (!(c.etas[i] < c.etas[i - 1]))
                throw std::invalid_argument("ExperimentConfig: eta list must strictly decrease");
        for (std::size_t i = 1; i < c.deltas.size(); ++i)
            if (!(c.deltas[i] < c.deltas[i - 1]))
                throw std::invalid_argument("ExperimentConfig: delta list must strictly decrease");
        if (c.workers < 1) throw std::invalid_argument("ExperimentConfig: workers must be >= 1");
    }
};

struct SweepRow {
    int scenario;
    double delta;  // 0 for scenario 1
    double eta;
    std::string observable;
    double value;
    double drift;
    double runtime_s;
    bool failed = false;
    std::string error;
};

struct SweepSummaryRow {
    int scenario;
    double delta;
    std::string observable;
    std::optional<double> extrapolated;
    std::optional<double> scattering_route;  // stationary evaluation of the same limit
    double target;
    std::string target_note;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummaryRow> summary;
    CriticalBiases criticals{0.0, 0.0};
};

inline BiasProfile scenario_profile(int scenario, const CriticalBiases& vc, double delta,
                                    const ExperimentConfig& cfg) {
    switch (scenario) {
        case 1: return make_scenario(ScenarioKind::smooth_no_crossing, vc);
        case 2: return make_scenario(ScenarioKind::cross_and_return, vc, delta, cfg.s_c, cfg.s_c_prime);
        case 3: return make_scenario(ScenarioKind::cross_to_second, vc, delta, cfg.s_c, cfg.s_c_prime);
        default: throw std::invalid_argument("scenario_profile: scenario must be 1, 2 or 3");
    }
}

inline Observable parse_observable(const std::string& name, const BiasProfile& prof,
                                   const ModelParams& p, const CriticalBiases& vc,
                                   const LatticeLayout& lay) {
    if (name == "bound_occupation")
        return Observable{to_complex(bound_state_vector(bound_state(prof.v_final, p, vc), lay))};
    if (name == "current_left") return Observable{CurrentTag{Lead::left}};
    if (name == "current_right") return Observable{CurrentTag{Lead::right}};
    throw std::invalid_argument("unknown observable: " + name);
}

// Linear extrapolation to eta = 0 through the two smallest-eta values.
inline std::optional<double> extrapolate_eta(const std::vector<double>& etas,
                                             const std::vector<double>& values) {
    if (etas.size() < 2) return std::nullopt;
    const std::size_t n = etas.size();
    const double e1 = etas[n - 1], e2 = etas[n - 2];
    const double v1 = values[n - 1], v2 = values[n - 2];
    return (v1 * e2 - v2 * e1) / (e2 - e1);
}

inline SweepResult run(const ExperimentConfig& cfg) {
    ExperimentConfig::validate(cfg);
    SweepResult result;
    const CriticalBiases vc = critical_biases(cfg.params);
    result.criticals = vc;

    struct Cell {
        int scenario;
        double delta;
        double eta;
        std::string observable;
    };
    std::vector<Cell> cells;
    for (int sc : cfg.scenarios) {
        const std::vector<double> ds = (sc == 1) ? std::vector<double>{0.0} : cfg.deltas;
        for (double d : ds)
            for (double eta : cfg.etas)
                for (const auto& obs : cfg.observables) cells.push_back({sc, d, eta, obs});
    }
    result.rows.resize(cells.size());

    // Group by eta so every cell of a group shares one equilibrium
    // diagonalization (v(-1) = 0 for every scenario).
    std::vector<std::size_t> order(cells.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cells[a].eta > cells[b].eta;
    });

    std::size_t pos = 0;
    while (pos < order.size()) {
        const double eta = cells[order[pos]].eta;
        std::size_t end = pos;
        while (end < order.size() && cells[order[end]].eta == eta) ++end;

        const LatticeLayout lay = layout_for_window(1.0 / eta, cfg.layout_pad);
        equilibrium_cache().get(0.0, cfg.params, lay);  // warm the shared eigensystem

        std::atomic<std::size_t> next{pos};
        auto worker = [&]() {
            while (true) {
                const std::size_t slot = next.fetch_add(1);
                if (slot >= end) return;
                const Cell& cell = cells[order[slot]];
                SweepRow row{cell.scenario, cell.delta, cell.eta, cell.observable,
                             0.0,          0.0,        0.0,      false,
                             ""};
                try {
                    const BiasProfile prof = scenario_profile(cell.scenario, vc, cell.delta, cfg);
                    PropagatorConfig pc(cell.eta, cfg.dt_for(cell.eta), lay);
                    const Observable obs =
                        parse_observable(cell.observable, prof, cfg.params, vc, lay);
                    const ExpectationResult r =
                        adiabatic_expectation(prof, cfg.params, cfg.fermi, pc, obs);
                    row.value = r.value;
                    row.drift = r.drift;
                    row.runtime_s = r.wall_seconds;
                } catch (const std::exception& e) {
                    row.failed = true;
                    row.error = e.what();
                }
                result.rows[order[slot]] = std::move(row);
            }
        };
        const int nw = std::min<int>(cfg.workers, static_cast<int>(end - pos));
        std::vector<std::thread> pool;
        for (int i = 1; i < nw; ++i) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        pos = end;
    }

    // Summaries: extrapolation per (scenario, delta, observable) plus the
    // stationary route and the limiting targets.
    for (int sc : cfg.scenarios) {
        const std::vector<double> ds = (sc == 1) ? std::vector<double>{0.0} : cfg.deltas;
        for (double d : ds)
            for (const auto& obs : cfg.observables) {
                std::vector<double> es, vs;
                for (const auto& row : result.rows)
                    if (row.scenario == sc && row.delta == d && row.observable == obs &&
                        !row.failed) {
                        es.push_back(row.eta);
                        vs.push_back(row.value);
                    }
                std::vector<std::size_t> idx(es.size());
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return es[a] > es[b]; });
                std::vector<double> es2, vs2;
                for (auto i : idx) {
                    es2.push_back(es[i]);
                    vs2.push_back(vs[i]);
                }

                SweepSummaryRow s{sc, d, obs, extrapolate_eta(es2, vs2), std::nullopt, 0.0, ""};
                if (obs == "bound_occupation") {
                    if (sc == 1) {
                        const auto ev = find_eigenvalue(0.0, cfg.params, vc);
                        s.target = cfg.fermi(ev->lambda);
                        s.target_note = "f_eq(lambda(-1)): no crossing, occupation inherited";
                    } else if (sc == 2) {
                        s.target = cfg.fermi(2.0);
                        s.target_note = "f_eq(2): re-emergence at the upper edge of the biased band";
                    } else {
                        s.target = cfg.fermi(-2.0);
                        s.target_note = "f_eq(-2): re-emergence at the lower edge of the biased band";
                    }
                    if (sc != 1) {
                        try {
                            const BiasProfile prof = scenario_profile(sc, vc, d, cfg);
                            const double v_before = prof.evaluate(prof.s_c_prime, EvalSide::left);
                            const double v_after = prof.evaluate(prof.s_c_prime, EvalSide::right);
                            const LatticeLayout lay(2048, 2048);
                            const cvec psi = to_complex(
                                bound_state_vector(bound_state(v_after, cfg.params, vc), lay));
                            const ChannelGrid grid = build_channel_grid(v_before, cfg.params);
                            s.scattering_route = memory_term(v_before, psi, cfg.fermi, cfg.params,
                                                             lay, grid, vc);
                        } catch (const std::exception&) {
                            s.scattering_route = std::nullopt;
                        }
                    }
                }
                result.summary.push_back(std::move(s));
            }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reports.

namespace detail {

inline std::string fmt(double x, const char* spec = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, x);
    return buf;
}

} // namespace detail

inline std::string csv_text(const SweepResult& result, bool fixed_timings) {
    std::string out = "scenario,delta,eta,observable,value,drift,runtime_s\n";
    for (const auto& r : result.rows) {
        out += std::to_string(r.scenario) + "," + detail::fmt(r.delta) + "," +
               detail::fmt(r.eta) + "," + r.observable + ",";
        if (r.failed) {
            out += "nan,nan,";
        } else {
            out += detail::fmt(r.value) + "," + detail::fmt(r.drift) + ",";
        }
        out += fixed_timings ? "0.000" : detail::fmt(r.runtime_s, "%.3f");
        out += "\n";
    }
    return out;
}

inline std::string summary_text(const SweepResult& result) {
    std::string out;
    out += "criticals: vc1 = " + detail::fmt(result.criticals.vc1) +
           ", vc2 = " + detail::fmt(result.criticals.vc2) + "\n";
    out += "scenario  delta   observable         extrapolated      stationary-route  target"
           "            note\n";
    for (const auto& s : result.summary) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-9d %-7.3g %-18s %-17s %-17s %-17s %s\n", s.scenario,
                      s.delta, s.observable.c_str(),
                      s.extrapolated ? detail::fmt(*s.extrapolated, "%.8f").c_str() : "-",
                      s.scattering_route ? detail::fmt(*s.scattering_route, "%.8f").c_str() : "-",
                      detail::fmt(s.target, "%.8f").c_str(), s.target_note.c_str());
        out += line;
    }
    return out;
}

inline void report_csv(const SweepResult& result, const std::string& path, bool fixed_timings) {
    const auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report_csv: cannot open " + path);
    out << csv_text(result, fixed_timings);
}

inline void report_summary(const SweepResult& result, const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report_summary: cannot open " + path);
    out << summary_text(result);
}

// [profile] section round-trip for scenario profiles.
inline std::string serialize_profile(const BiasProfile& prof) {
    std::string out = "[profile]\n";
    out += "kind = " + std::to_string(static_cast<int>(prof.kind)) + "\n";
    out += "delta = " + detail::fmt(prof.delta, "%.17g") + "\n";
    out += "s_c = " + detail::fmt(prof.s_c, "%.17g") + "\n";
    out += "s_c_prime = " + detail::fmt(prof.s_c_prime, "%.17g") + "\n";
    out += "v_final = " + detail::fmt(prof.v_final, "%.17g") + "\n";
    return out;
}

inline BiasProfile profile_from_config(const ConfigFile& cf, const CriticalBiases& vc) {
    const int kind = cf.get_int("profile", "kind", 1);
    ScenarioOptions opt;
    if (cf.has("profile", "v_final")) opt.v_final = cf.get_double("profile", "v_final", 0.0);
    return make_scenario(static_cast<ScenarioKind>(kind), vc,
                         cf.get_double("profile", "delta", 0.0),
                         cf.get_double("profile", "s_c", default_s_c),
                         cf.get_double("profile", "s_c_prime", default_s_c_prime), opt);
}

} // namespace dotlead

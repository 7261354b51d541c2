#include "dcf/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "dcf/errors.hpp"
#include "dcf/optimizer.hpp"
#include "dcf/parallel.hpp"
#include "dcf/scenarios.hpp"

#ifndef DCF_VERSION
#define DCF_VERSION "0.0.0"
#endif

namespace dcf {

namespace {

using nlohmann::json;

constexpr double kDefaultTraceWindow = 2.0;  // seconds, used by fig7 when sim.window_s is 0

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::set<std::string> keys_of(const json& j) {
    std::set<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.insert(k);
    return keys;
}

void check_keys(const json& section, const std::string& name, const std::set<std::string>& allowed) {
    if (!section.is_object()) {
        throw ConfigError(name + " section must be an object");
    }
    for (const auto& [k, v] : section.items()) {
        if (!allowed.contains(k)) {
            throw ConfigError("unknown key '" + name + "." + k + "'");
        }
    }
}

const json& section_or_empty(const json& doc, const char* name) {
    static const json empty = json::object();
    return doc.contains(name) ? doc.at(name) : empty;
}

std::string_view to_string(BackoffVariant v) {
    return v == BackoffVariant::PostBackoff ? "post_backoff" : "idle";
}

BackoffVariant variant_from_string(const std::string& s) {
    if (s == "idle") return BackoffVariant::IdleState;
    if (s == "post_backoff") return BackoffVariant::PostBackoff;
    throw ConfigError("unknown sim.variant '" + s + "' (expected idle or post_backoff)");
}

void read_solver(const json& j, SolverSettings& s) {
    check_keys(j, "solver", {"tolerance", "max_iterations", "damping", "root_scan_points"});
    if (j.contains("tolerance")) s.tolerance = j.at("tolerance").get<double>();
    if (j.contains("max_iterations")) s.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("damping")) s.damping = j.at("damping").get<double>();
    if (j.contains("root_scan_points")) s.root_scan_points = j.at("root_scan_points").get<int>();
    try {
        s.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
}

void read_sim(const json& j, RunConfig& c) {
    check_keys(j, "sim", {"seed", "duration_s", "warmup_s", "queue_capacity", "window_s", "variant",
                          "replicates", "timeline", "reconfigurations"});
    auto& s = c.sim;
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("duration_s")) s.duration = j.at("duration_s").get<double>();
    if (j.contains("warmup_s")) s.warmup = j.at("warmup_s").get<double>();
    if (j.contains("queue_capacity")) s.queue_capacity = j.at("queue_capacity").get<int>();
    if (j.contains("window_s")) s.window = j.at("window_s").get<double>();
    if (j.contains("variant")) s.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
    if (j.contains("timeline")) {
        for (const auto& e : j.at("timeline")) {
            check_keys(e, "sim.timeline[]", {"time_s", "station", "on"});
            s.timeline.push_back({e.at("time_s").get<double>(), e.at("station").get<int>(),
                                  e.at("on").get<bool>()});
        }
    }
    if (j.contains("reconfigurations")) {
        for (const auto& e : j.at("reconfigurations")) {
            check_keys(e, "sim.reconfigurations[]", {"time_s", "w0", "payload_bytes"});
            Reconfiguration r;
            r.time = e.at("time_s").get<double>();
            if (e.contains("w0")) r.w0 = e.at("w0").get<int>();
            if (e.contains("payload_bytes")) r.payload_bits = e.at("payload_bytes").get<Bits>() * kBitsPerByte;
            s.reconfigurations.push_back(r);
        }
    }
    if (c.replicates < 1) {
        throw ConfigError("sim.replicates must be >= 1");
    }
}

void read_sweep(const json& j, SweepSpec& s) {
    check_keys(j, "sweep", {"axis", "grid", "start", "stop", "points", "log"});
    if (j.contains("axis")) s.axis = sweep_axis_from_string(j.at("axis").get<std::string>());
    if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("start")) s.start = j.at("start").get<double>();
    if (j.contains("stop")) s.stop = j.at("stop").get<double>();
    if (j.contains("points")) s.points = j.at("points").get<int>();
    if (j.contains("log")) s.log = j.at("log").get<bool>();
}

json sim_to_json(const RunConfig& c) {
    const auto& s = c.sim;
    json timeline = json::array();
    for (const auto& e : s.timeline) {
        timeline.push_back({{"time_s", e.time}, {"station", e.station}, {"on", e.on}});
    }
    json reconf = json::array();
    for (const auto& r : s.reconfigurations) {
        json e = {{"time_s", r.time}};
        if (r.w0) e["w0"] = *r.w0;
        if (r.payload_bits) e["payload_bytes"] = *r.payload_bits / kBitsPerByte;
        reconf.push_back(e);
    }
    return {{"seed", s.seed},
            {"duration_s", s.duration},
            {"warmup_s", s.warmup},
            {"queue_capacity", s.queue_capacity},
            {"window_s", s.window},
            {"variant", std::string(to_string(s.variant))},
            {"replicates", c.replicates},
            {"timeline", timeline},
            {"reconfigurations", reconf}};
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes one CSV: manifest comment block, then the body.
class Emitter {
public:
    Emitter(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {
        std::error_code ec;
        std::filesystem::create_directories(cfg_.out_dir, ec);
        if (ec) {
            throw ConfigError("cannot create output directory '" + cfg_.out_dir + "': " + ec.message());
        }
    }

    template <typename Body>
    std::string write(const std::string& name, Body&& body) {
        const auto path = (std::filesystem::path(cfg_.out_dir) / name).string();
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write '" + path + "'");
        }
        f << "# command: " << command_ << '\n'
          << "# version: " << DCF_VERSION << '\n'
          << "# seed: " << cfg_.sim.seed << '\n'
          << "# output: " << name << '\n'
          << "# config: " << cfg_.to_json().dump() << '\n'
          << "# timestamp: " << utc_timestamp() << '\n';
        body(f);
        if (!f) {
            throw ConfigError("write failed for '" + path + "'");
        }
        written_.push_back(path);
        return path;
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    std::string command_;
    const RunConfig& cfg_;
    std::vector<std::string> written_;
};

SimConfig sim_for(const RunConfig& c) {
    SimConfig s = c.sim;
    s.scenario = c.scenario;
    s.timing = c.timing;
    return s;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
    const auto sol = solve_equilibrium(c.scenario, c.timing, c.solver);
    const auto op = operating_point(c.scenario, c.timing, sol);
    Emitter em("solve", c);
    em.write("solve.csv", [&](std::ostream& f) {
        f << "n_stations,lambda_pps,w0,m,payload_B,p_e,tau,p_col,p_eq,q,E_slot_s,S_bps,tau_m,S_m_bps,"
             "lambda_c_pps,region,residual,iterations,multiple_roots\n";
        f << c.scenario.n_stations << ',' << (c.scenario.saturated ? "inf" : num(c.scenario.lambda)) << ','
          << c.scenario.w0 << ',' << c.scenario.m << ',' << c.scenario.payload_bits / kBitsPerByte << ','
          << num(sol.p_e) << ',' << num(sol.tau) << ',' << num(sol.p_col) << ',' << num(sol.p_eq) << ','
          << num(sol.q) << ',' << num(sol.expected_slot) << ',' << num(op.throughput) << ','
          << num(op.tau_m) << ',' << num(op.s_m) << ',' << num(op.lambda_c) << ',' << to_string(op.region)
          << ',' << num(sol.residual) << ',' << sol.iterations << ',' << (sol.multiple_roots ? 1 : 0)
          << '\n';
    });
    out << "tau=" << num(sol.tau) << " p_eq=" << num(sol.p_eq) << " q=" << num(sol.q)
        << " S=" << num(op.throughput) << " bps S_m=" << num(op.s_m)
        << " bps lambda_c=" << num(op.lambda_c) << " pkt/s region=" << to_string(op.region) << '\n';
    if (sol.multiple_roots) {
        out << "warning: more than one fixed point; reporting the smallest tau\n";
    }
    for (const auto& p : em.written()) out << "wrote " << p << '\n';
    return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
    const auto grid = c.sweep.values();
    const auto rows = sweep(c.scenario, c.timing, c.sweep.axis, grid, c.solver, c.jobs);
    Emitter em("sweep", c);
    em.write("sweep.csv", [&](std::ostream& f) { write_sweep_csv(f, rows); });
    out << rows.size() << " rows over " << to_string(c.sweep.axis) << '\n';
    for (const auto& p : em.written()) out << "wrote " << p << '\n';
    return kExitOk;
}

int cmd_optimize(const RunConfig& c, std::ostream& out) {
    const auto outcome = optimize(c.scenario, c.timing);
    Emitter em("optimize", c);
    em.write("optimize.csv", [&](std::ostream& f) { write_outcome_csv(f, outcome); });
    out << "region=" << to_string(outcome.region) << " lambda_c=" << num(outcome.lambda_c) << " pkt/s";
    if (outcome.w_op) out << " w_op=" << *outcome.w_op;
    if (outcome.payload_opt_bits) out << " payload=" << *outcome.payload_opt_bits / kBitsPerByte << " B";
    out << " predicted_S=" << num(outcome.predicted_throughput) << " bps\n";
    if (outcome.region_shift_warning) {
        out << "warning: load exceeds lambda_c even at the minimum payload\n";
    }
    for (const auto& p : em.written()) out << "wrote " << p << '\n';
    return kExitOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const auto base = sim_for(c);
    base.validate();
    std::vector<SimMetrics> runs(static_cast<std::size_t>(c.replicates));
    parallel_for(runs.size(), c.jobs, [&](std::size_t i) {
        auto cfg = base;
        cfg.seed = base.seed + i;
        runs[i] = run(cfg);
    });
    Emitter em("simulate", c);
    em.write("simulate_metrics.csv", [&](std::ostream& f) { write_metrics_csv(f, runs); });
    em.write("simulate_stations.csv", [&](std::ostream& f) { write_station_csv(f, runs.front()); });
    if (base.window > 0.0) {
        em.write("simulate_trace.csv", [&](std::ostream& f) { write_trace_csv(f, runs.front().trace); });
    }
    for (const auto& m : runs) {
        out << "seed=" << m.seed << " S=" << num(m.aggregate_throughput_bps)
            << " bps tau=" << num(m.measured_tau) << " p_col=" << num(m.measured_p_col) << '\n';
    }
    for (const auto& p : em.written()) out << "wrote " << p << '\n';
    return kExitOk;
}

int cmd_fig7(const RunConfig& c, std::ostream& out) {
    const auto phases = on_off_phases(c.scenario.n_stations);
    const auto plan = plan_phases(c.scenario, c.timing, phases);
    auto base = sim_for(c);
    base.duration = kOnOffDuration;
    base.warmup = 0.0;
    if (base.window <= 0.0) base.window = kDefaultTraceWindow;
    base.timeline.clear();
    base.reconfigurations.clear();
    const SimConfig configs[2] = {schedule_config(base, phases), schedule_config(base, phases, &plan)};
    SimMetrics runs[2];
    parallel_for(2, c.jobs, [&](std::size_t i) { runs[i] = run(configs[i]); });

    auto phase_at = [&](double t) {
        std::size_t k = 0;
        while (k + 1 < plan.size() && plan[k + 1].phase.start <= t) ++k;
        return k;
    };
    Emitter em("fig7", c);
    em.write("fig7.csv", [&](std::ostream& f) {
        f << "t_start_s,t_end_s,active,S_baseline_bps,S_optimized_bps,S_m_bps\n";
        for (std::size_t i = 0; i < runs[1].trace.size(); ++i) {
            const auto& w = runs[1].trace[i];
            const auto& p = plan[phase_at(w.t_start)];
            f << num(w.t_start) << ',' << num(w.t_end) << ',' << p.phase.active << ','
              << num(runs[0].trace[i].throughput_bps) << ',' << num(w.throughput_bps) << ','
              << num(p.capacity) << '\n';
        }
    });
    em.write("fig7_plan.csv", [&](std::ostream& f) {
        f << "phase_start_s,active,region,w_op,payload_opt_B,lambda_c_pps,S_m_bps\n";
        for (const auto& p : plan) {
            f << num(p.phase.start) << ',' << p.phase.active << ',' << to_string(p.outcome.region) << ',';
            if (p.outcome.w_op) f << *p.outcome.w_op;
            f << ',';
            if (p.outcome.payload_opt_bits) f << *p.outcome.payload_opt_bits / kBitsPerByte;
            f << ',' << num(p.outcome.lambda_c) << ',' << num(p.capacity) << '\n';
        }
    });
    for (const auto& p : plan) {
        out << "t>=" << num(p.phase.start) << "s active=" << p.phase.active
            << " region=" << to_string(p.outcome.region);
        if (p.outcome.w_op) out << " w_op=" << *p.outcome.w_op;
        out << " S_m=" << num(p.capacity) << " bps\n";
    }
    out << "baseline S=" << num(runs[0].aggregate_throughput_bps)
        << " bps optimized S=" << num(runs[1].aggregate_throughput_bps) << " bps\n";
    for (const auto& p : em.written()) out << "wrote " << p << '\n';
    return kExitOk;
}

json read_config_file(const std::string& path) {
    if (path.empty()) {
        return json::object();
    }
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    try {
        return json::parse(f, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

}  // namespace

std::vector<double> SweepSpec::values() const {
    if (!grid.empty()) {
        return grid;
    }
    if (points < 1) throw ConfigError("sweep.points must be >= 1");
    if (log && (start <= 0.0 || stop <= 0.0)) throw ConfigError("log sweep needs positive bounds");
    std::vector<double> v;
    for (int i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        v.push_back(log ? start * std::pow(stop / start, f) : start + (stop - start) * f);
    }
    return v;
}

json RunConfig::to_json() const {
    json sweep_j = {{"axis", std::string(dcf::to_string(sweep.axis))},
                    {"start", sweep.start},
                    {"stop", sweep.stop},
                    {"points", sweep.points},
                    {"log", sweep.log}};
    if (!sweep.grid.empty()) sweep_j["grid"] = sweep.grid;
    json timing_j = timing_to_json(timing);
    timing_j["profile"] = profile;
    return {{"timing", timing_j},
            {"scenario", scenario_to_json(scenario)},
            {"solver",
             {{"tolerance", solver.tolerance},
              {"max_iterations", solver.max_iterations},
              {"damping", solver.damping},
              {"root_scan_points", solver.root_scan_points}}},
            {"sim", sim_to_json(*this)},
            {"sweep", sweep_j},
            {"outputs", {{"dir", out_dir}}}};
}

RunConfig load_config(const json& doc, const char* profile_env) {
    if (!doc.is_object()) {
        throw ConfigError("config root must be an object");
    }
    check_keys(doc, "config", {"timing", "scenario", "solver", "sim", "sweep", "outputs"});
    RunConfig c;
    try {
        if (profile_env != nullptr && *profile_env != '\0') {
            c.profile = profile_env;
        }
        const auto& tj = section_or_empty(doc, "timing");
        auto timing_keys = keys_of(timing_to_json(ProtocolTiming{}));
        timing_keys.insert("profile");
        check_keys(tj, "timing", timing_keys);
        if (tj.contains("profile")) c.profile = tj.at("profile").get<std::string>();
        c.timing = timing_from_json(tj, timing_profile(c.profile));

        const auto& sj = section_or_empty(doc, "scenario");
        auto scenario_keys = keys_of(scenario_to_json(ScenarioParams{}));
        scenario_keys.insert({"bit_error_prob", "packet_error_prob"});
        check_keys(sj, "scenario", scenario_keys);
        c.scenario = scenario_from_json(sj);

        read_solver(section_or_empty(doc, "solver"), c.solver);
        read_sim(section_or_empty(doc, "sim"), c);
        read_sweep(section_or_empty(doc, "sweep"), c.sweep);

        const auto& oj = section_or_empty(doc, "outputs");
        check_keys(oj, "outputs", {"dir"});
        if (oj.contains("dir")) c.out_dir = oj.at("dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    return c;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad grid value '" + item + "'");
        }
    }
    if (v.empty()) throw ConfigError("empty grid");
    return v;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Non-saturated 802.11 DCF model: solve, sweep, optimize, simulate"};
    app.set_version_flag("--version", DCF_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> axis;
    std::optional<std::string> grid;
    app.add_option("--config", config_path, "JSON config file ({} when omitted)");
    app.add_option("--jobs", jobs, "worker threads for sweeps and replicates")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out_dir, "output directory");

    auto* solve = app.add_subcommand("solve", "solve the fixed point at one operating point");
    auto* sweep_cmd = app.add_subcommand("sweep", "solve over a grid of one parameter");
    sweep_cmd->add_option("--axis", axis, "lambda, w0, payload or n");
    sweep_cmd->add_option("--grid", grid, "comma-separated grid values");
    auto* optimize_cmd = app.add_subcommand("optimize", "choose W_OP or the payload size");
    auto* simulate = app.add_subcommand("simulate", "run the slot-level simulator");
    auto* fig7 = app.add_subcommand("fig7", "10-5-10 station on/off run, baseline vs optimized");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        auto cfg = load_config(read_config_file(config_path), std::getenv("DCF_PROFILE"));
        if (jobs) cfg.jobs = *jobs;
        if (seed) cfg.sim.seed = *seed;
        if (out_dir) cfg.out_dir = *out_dir;
        if (axis) cfg.sweep.axis = sweep_axis_from_string(*axis);
        if (grid) cfg.sweep.grid = parse_grid(*grid);
        try {
            cfg.scenario.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }

        if (solve->parsed()) return cmd_solve(cfg, out);
        if (sweep_cmd->parsed()) return cmd_sweep(cfg, out);
        if (optimize_cmd->parsed()) return cmd_optimize(cfg, out);
        if (simulate->parsed()) return cmd_simulate(cfg, out);
        if (fig7->parsed()) return cmd_fig7(cfg, out);
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidParameter& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolverFailure& e) {
        err << "solver failure: " << e.what() << " (residual " << num(e.residual()) << ")\n";
        return kExitSolver;
    } catch (const InfeasibleTarget& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const InfeasibleWindow& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace dcf

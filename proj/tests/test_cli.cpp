#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "dcf/cli.hpp"
#include "dcf/errors.hpp"

using namespace dcf;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dcf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("dcf_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p.string();
}

std::string read(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string without_timestamp(const std::string& text) {
    std::istringstream is(text);
    std::string line, kept;
    while (std::getline(is, line)) {
        if (line.rfind("# timestamp:", 0) != 0) kept += line + '\n';
    }
    return kept;
}

std::string first_data_line(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '#') return line;
    }
    return {};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("empty config runs every analytical command") {
    const auto dir = scratch("empty");
    const auto cfg = write_file(dir / "c.json", "{}");
    for (const char* cmd : {"solve", "sweep", "optimize"}) {
        const auto r = cli({cmd, "--config", cfg, "--out", dir.string()});
        CAPTURE(cmd);
        CAPTURE(r.err);
        CHECK(r.code == kExitOk);
    }
    CHECK(first_data_line(read(dir / "solve.csv")) ==
          "n_stations,lambda_pps,w0,m,payload_B,p_e,tau,p_col,p_eq,q,E_slot_s,S_bps,tau_m,S_m_bps,"
          "lambda_c_pps,region,residual,iterations,multiple_roots");
    CHECK(first_data_line(read(dir / "sweep.csv")) ==
          "axis_value,tau,p_col,p_eq,q,E_slot_s,S_bps,tau_m,S_m_bps,lambda_c_pps,region");
    CHECK(first_data_line(read(dir / "optimize.csv")) ==
          "region,w_op,payload_step1_B,payload_step2_B,payload_opt_B,achieved_pe,predicted_S_bps");
    // Config file is optional.
    CHECK(cli({"solve", "--out", dir.string()}).code == kExitOk);
}

TEST_CASE("manifest header precedes every csv") {
    const auto dir = scratch("manifest");
    REQUIRE(cli({"solve", "--out", dir.string(), "--seed", "9"}).code == kExitOk);
    const auto text = read(dir / "solve.csv");
    CHECK(text.rfind("# command: solve\n# version: ", 0) == 0);
    CHECK(text.find("# seed: 9\n") != std::string::npos);
    CHECK(text.find("# config: {") != std::string::npos);
    CHECK(text.find("# timestamp: ") != std::string::npos);
    const auto manifest_end = text.find("\nn_stations,");
    CHECK(manifest_end != std::string::npos);
}

TEST_CASE("identical manifests reproduce identical bytes apart from the timestamp") {
    const auto a = scratch("repro_a");
    const auto b = scratch("repro_b");
    const auto cfg = write_file(a / "c.json", R"({"sim": {"duration_s": 5, "window_s": 1}, "outputs": {"dir": "x"}})");
    for (const auto& d : {a, b}) {
        REQUIRE(cli({"simulate", "--config", cfg, "--out", "shared_name_ignored"}).code == kExitOk);
        fs::rename("shared_name_ignored/simulate_metrics.csv", d / "m.csv");
        fs::rename("shared_name_ignored/simulate_trace.csv", d / "t.csv");
    }
    fs::remove_all("shared_name_ignored");
    CHECK(without_timestamp(read(a / "m.csv")) == without_timestamp(read(b / "m.csv")));
    CHECK(without_timestamp(read(a / "t.csv")) == without_timestamp(read(b / "t.csv")));
}

TEST_CASE("flags override file values") {
    const auto dir = scratch("override");
    const auto cfg = write_file(dir / "c.json", R"({"sim": {"seed": 5, "duration_s": 2}, "outputs": {"dir": "/nonexistent/ignored"}})");
    REQUIRE(cli({"simulate", "--config", cfg, "--seed", "77", "--out", dir.string()}).code == kExitOk);
    const auto text = read(dir / "simulate_metrics.csv");
    CHECK(text.find("# seed: 77\n") != std::string::npos);
    CHECK(first_data_line(text.substr(text.find("seed,"))).rfind("seed,", 0) == 0);
    CHECK(text.find("\n77,") != std::string::npos);
}

TEST_CASE("sweep axis and grid flags, order preserved under a worker pool") {
    const auto dir = scratch("sweep");
    REQUIRE(cli({"sweep", "--axis", "w0", "--grid", "256,16,64", "--jobs", "3", "--out", dir.string()}).code == kExitOk);
    std::istringstream is(read(dir / "sweep.csv"));
    std::string line;
    std::vector<std::string> firsts;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'a') continue;
        firsts.push_back(line.substr(0, line.find(',')));
    }
    CHECK(firsts == std::vector<std::string>{"256", "16", "64"});
}

TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    CHECK(cli({"solve", "--config", (dir / "missing.json").string()}).code == kExitConfig);
    CHECK(cli({"solve", "--config", write_file(dir / "bad.json", "{not json")}).code == kExitConfig);
    CHECK(cli({"solve", "--config", write_file(dir / "key.json", R"({"scenario": {"nn": 3}})")}).code == kExitConfig);
    CHECK(cli({"solve", "--config", write_file(dir / "sec.json", R"({"extra": {}})")}).code == kExitConfig);
    CHECK(cli({"solve", "--config", write_file(dir / "neg.json", R"({"scenario": {"n_stations": 0}})")}).code == kExitConfig);
    CHECK(cli({"sweep", "--axis", "banana"}).code == kExitConfig);
    CHECK(cli({"bogus"}).code == kExitConfig);
    CHECK(cli({}).code == kExitConfig);
    const auto tight = write_file(dir / "tight.json", R"({"solver": {"tolerance": 1e-300, "max_iterations": 3}})");
    CHECK(cli({"solve", "--config", tight, "--out", dir.string()}).code == kExitSolver);
    const auto lossy = write_file(
        dir / "lossy.json",
        R"({"scenario": {"lambda_pps": 0.00001, "bit_error_prob": 0.01}})");
    CHECK(cli({"optimize", "--config", lossy, "--out", dir.string()}).code == kExitInfeasible);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("idle scenario prints a zero-tau row") {
    const auto dir = scratch("idle");
    const auto cfg = write_file(dir / "c.json", R"({"scenario": {"lambda_pps": 0}})");
    const auto r = cli({"solve", "--config", cfg, "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("tau=0 ", 0) == 0);
}

TEST_CASE("scenario A through the optimize command") {
    const auto dir = scratch("scenario_a");
    const auto cfg = write_file(
        dir / "c.json",
        R"({"scenario": {"n_stations": 10, "lambda_pps": 5, "payload_bytes": 1024, "bit_error_prob": 1e-5}})");
    REQUIRE(cli({"optimize", "--config", cfg, "--out", dir.string()}).code == kExitOk);
    const auto text = read(dir / "optimize.csv");
    CHECK(text.find("\nBLC,,") != std::string::npos);
    CHECK(text.find(",991,991,") != std::string::npos);
}

TEST_CASE("timing profile from the environment, file profile wins") {
    const auto base = load_config(nlohmann::json::object());
    CHECK(base.profile == "dot11b-table1");
    const auto env = load_config(nlohmann::json::object(), "basic-difs");
    CHECK(env.timing.collision_tail == BusyTail::Difs);
    const auto file = load_config(nlohmann::json{{"timing", {{"profile", "ack-timeout"}}}}, "basic-difs");
    CHECK(file.timing.collision_tail == BusyTail::AckTimeout);
    CHECK_THROWS_AS(load_config(nlohmann::json::object(), "missing-profile"), ConfigError);

    const auto dir = scratch("profile");
    ::setenv("DCF_PROFILE", "basic-difs", 1);
    const auto r = cli({"solve", "--out", dir.string()});
    ::unsetenv("DCF_PROFILE");
    REQUIRE(r.code == kExitOk);
    CHECK(read(dir / "solve.csv").find(R"("profile":"basic-difs")") != std::string::npos);
}

TEST_CASE("fig7 writes both traces and the per-phase plan") {
    const auto dir = scratch("fig7");
    const auto r = cli({"fig7", "--out", dir.string(), "--jobs", "2"});
    REQUIRE(r.code == kExitOk);
    const auto trace = read(dir / "fig7.csv");
    CHECK(first_data_line(trace) == "t_start_s,t_end_s,active,S_baseline_bps,S_optimized_bps,S_m_bps");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 6 + 1 + 60);
    CHECK(first_data_line(read(dir / "fig7_plan.csv")) ==
          "phase_start_s,active,region,w_op,payload_opt_B,lambda_c_pps,S_m_bps");
}

TEST_CASE("config rendering round-trips through the loader") {
    auto c = load_config(nlohmann::json{{"scenario", {{"n_stations", 4}}}, {"sim", {{"replicates", 3}}}});
    const auto again = load_config(c.to_json());
    CHECK(again.scenario.n_stations == 4);
    CHECK(again.replicates == 3);
    CHECK(again.to_json() == c.to_json());
    CHECK(parse_grid("1, 2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
    CHECK_THROWS_AS(parse_grid("1,x"), ConfigError);
}

}  // TEST_SUITE

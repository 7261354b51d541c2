#pragma once

// `dcf` command-line front end: config ingestion, the five commands and
// CSV emission with a `#` manifest header.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcf/fixed_point.hpp"
#include "dcf/simulator.hpp"
#include "dcf/throughput.hpp"

namespace dcf {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfig = 2,
    kExitSolver = 3,
    kExitInfeasible = 4,
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::Lambda;
    std::vector<double> grid;  // explicit values win over the range below
    double start = 0.1;
    double stop = 100.0;
    int points = 31;
    bool log = true;

    std::vector<double> values() const;
};

/// Everything a command needs, resolved from defaults, DCF_PROFILE, the
/// config file and flags (in that order of precedence, lowest first).
struct RunConfig {
    std::string profile = "dot11b-table1";
    ProtocolTiming timing;
    ScenarioParams scenario;
    SolverSettings solver;
    SimConfig sim;  // scenario and timing are copied in at run time
    int replicates = 1;
    SweepSpec sweep;
    std::string out_dir = ".";
    int jobs = 1;

    nlohmann::json to_json() const;
};

/// Throws ConfigError on unknown sections/keys or invalid values.
RunConfig load_config(const nlohmann::json& doc, const char* profile_env = nullptr);

/// Grid string "a,b,c" -> values. Throws ConfigError.
std::vector<double> parse_grid(const std::string& text);

/// Full CLI entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dcf

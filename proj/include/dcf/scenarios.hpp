#pragma once

// Piecewise-constant station on/off schedules and the per-phase
// optimizer plan used for the dynamic 10 -> 5 -> 10 station run.

#include <vector>

#include "dcf/optimizer.hpp"
#include "dcf/simulator.hpp"

namespace dcf {

/// Stations [0, active) carry traffic from `start` until the next phase.
struct Phase {
    double start = 0.0;
    int active = 0;
};

/// 0-40 s: n stations, 40-80 s: n/2, 80-120 s: n.
std::vector<Phase> on_off_phases(int n);
constexpr double kOnOffDuration = 120.0;

struct PhasePlan {
    Phase phase;
    OptimizationOutcome outcome;  // optimizer run with N = active
    double capacity = 0.0;        // S_m at the applied configuration, bit/s
};

/// Runs the optimizer once per phase with the phase's station count.
std::vector<PhasePlan> plan_phases(const ScenarioParams& scenario, const ProtocolTiming& timing,
                                   const std::vector<Phase>& phases);

/// Adds the on/off timeline to `base`. With a plan, each phase start also
/// reconfigures the network to the phase's optimizer outcome.
SimConfig schedule_config(SimConfig base, const std::vector<Phase>& phases,
                          const std::vector<PhasePlan>* plan = nullptr);

}  // namespace dcf

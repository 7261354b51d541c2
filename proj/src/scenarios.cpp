#include "dcf/scenarios.hpp"

#include <algorithm>

#include "dcf/errors.hpp"

namespace dcf {

std::vector<Phase> on_off_phases(int n) {
    return {{0.0, n}, {40.0, n / 2}, {80.0, n}};
}

std::vector<PhasePlan> plan_phases(const ScenarioParams& scenario, const ProtocolTiming& timing,
                                   const std::vector<Phase>& phases) {
    std::vector<PhasePlan> plan;
    plan.reserve(phases.size());
    for (const auto& ph : phases) {
        if (ph.active < 1 || ph.active > scenario.n_stations) {
            throw ConfigError("phase station count out of range");
        }
        auto local = scenario;
        local.n_stations = ph.active;
        PhasePlan p;
        p.phase = ph;
        p.outcome = optimize(local, timing);
        const auto applied = apply_outcome(local, p.outcome, timing);
        p.capacity = link_capacity(applied.n_stations, applied.packet_error(timing),
                                   applied.payload_bits, slot_durations(timing, applied.payload_bits));
        plan.push_back(p);
    }
    return plan;
}

SimConfig schedule_config(SimConfig base, const std::vector<Phase>& phases,
                          const std::vector<PhasePlan>* plan) {
    const int n = base.scenario.n_stations;
    int active = n;
    for (const auto& ph : phases) {
        const int target = std::clamp(ph.active, 0, n);
        for (int s = std::min(active, target); s < std::max(active, target); ++s) {
            base.timeline.push_back({ph.start, s, target > active});
        }
        active = target;
    }
    if (plan != nullptr) {
        for (const auto& p : *plan) {
            Reconfiguration r;
            r.time = p.phase.start;
            if (p.outcome.region == Region::LC) {
                r.w0 = p.outcome.w_op;
            } else {
                r.payload_bits = p.outcome.payload_opt_bits;
            }
            base.reconfigurations.push_back(r);
        }
    }
    std::stable_sort(base.timeline.begin(), base.timeline.end(),
                     [](const TimelineEvent& a, const TimelineEvent& b) { return a.time < b.time; });
    return base;
}

}  // namespace dcf

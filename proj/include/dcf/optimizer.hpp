#pragma once

// Cross-layer tuning: contention window at link capacity, payload size
// below it.

#include <iosfwd>
#include <optional>

#include "dcf/protocol.hpp"
#include "dcf/throughput.hpp"

namespace dcf {

struct OptimizationOutcome {
    Region region = Region::BLC;
    double lambda_c = 0.0;  // at the incoming scenario
    std::optional<int> w_op;
    std::optional<double> w_op_real;
    std::optional<Bits> payload_opt_bits;
    std::optional<Bits> payload_step1_bits;
    std::optional<Bits> payload_step2_bits;  // kUnboundedPayload on a clean channel
    Bits pl_max_bits = 0;
    double predicted_throughput = 0.0;  // bit/s
    double achieved_pe = 0.0;
    bool region_shift_warning = false;
};

/// Real-valued minimum window that drives saturated tau to tau_m.
/// Throws InvalidParameter for n < 2, InfeasibleWindow when below one slot.
double optimal_contention_window_real(int n, double p_e, int m, const SlotDurations& slots);

/// optimal_contention_window_real rounded to the nearest integer >= 2.
int optimal_contention_window(int n, double p_e, int m, const SlotDurations& slots);

struct CriticalPayload {
    Bits payload_bits = 0;
    // lambda exceeds lambda_c even at the minimum payload.
    bool region_shift = false;
};

/// Largest whole-byte payload <= pl_max whose lambda_c (with P_e
/// re-derived from P_b at that payload) is still >= lambda.
CriticalPayload payload_for_critical_load(double lambda, int n, double bit_error_prob,
                                          const ProtocolTiming& timing, Bits pl_max_bits);

/// One pass of the per-station decision: W_OP if lambda > lambda_c,
/// otherwise min(step1, step2, PL_max) for the payload.
OptimizationOutcome optimize(const ScenarioParams& scenario, const ProtocolTiming& timing);

/// Scenario with the outcome's lever applied (W0 in LC, payload in BLC).
ScenarioParams apply_outcome(ScenarioParams scenario, const OptimizationOutcome& outcome,
                             const ProtocolTiming& timing);

/// Header: region,w_op,payload_step1_B,payload_step2_B,payload_opt_B,achieved_pe,predicted_S_bps
void write_outcome_csv(std::ostream& out, const OptimizationOutcome& outcome);

}  // namespace dcf

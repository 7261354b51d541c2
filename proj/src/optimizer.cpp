#include "dcf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "dcf/errors.hpp"

namespace dcf {

namespace {

double critical_load_at(Bits payload_bits, int n, double bit_error_prob, const ProtocolTiming& timing) {
    const double p_e = packet_error_rate(bit_error_prob, payload_bits, timing);
    return critical_load(n, p_e, payload_bits, slot_durations(timing, payload_bits));
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string bytes_or_empty(const std::optional<Bits>& bits) {
    if (!bits) return "";
    if (*bits == kUnboundedPayload) return "inf";
    return std::to_string(*bits / kBitsPerByte);
}

}  // namespace

double optimal_contention_window_real(int n, double p_e, int m, const SlotDurations& slots) {
    if (n < 2) {
        throw InvalidParameter("optimal contention window needs n >= 2");
    }
    if (!(p_e >= 0.0 && p_e <= 1.0) || m < 0) {
        throw InvalidParameter("need P_e in [0,1] and m >= 0");
    }
    if (p_e == 1.0) {
        throw InfeasibleWindow("P_e = 1: no contention window delivers any frame");
    }
    const double tau_m = tau_star(n, slots.sigma, slots.t_collision);
    const double x = (1.0 - p_e) * std::pow(1.0 - tau_m, n - 1);
    const double p_eq = 1.0 - x;

    // Literal form: [1 - 2/tau + X(4/tau - 2)] / [2X - 1 + (1-X)(1 - 2^m (1-X)^m)].
    // Numerator and denominator share the factor (2X - 1); cancelling it
    // leaves a denominator >= 1.
    double geometric = 0.0;
    double term = 1.0;
    for (int i = 0; i < m; ++i) {
        geometric += term;
        term *= 2.0 * p_eq;
    }
    const double w = (2.0 / tau_m - 1.0) / (1.0 + p_eq * geometric);
    if (!(w >= 1.0)) {
        std::ostringstream os;
        os << "no contention window reaches tau_m=" << tau_m << " (W_OP=" << w << ", n=" << n
           << ", P_e=" << p_e << ", m=" << m << ")";
        throw InfeasibleWindow(os.str());
    }
    return w;
}

int optimal_contention_window(int n, double p_e, int m, const SlotDurations& slots) {
    const double w = optimal_contention_window_real(n, p_e, m, slots);
    return std::max(2, static_cast<int>(std::lround(w)));
}

CriticalPayload payload_for_critical_load(double lambda, int n, double bit_error_prob,
                                          const ProtocolTiming& timing, Bits pl_max_bits) {
    if (!(lambda > 0.0) || n < 1 || pl_max_bits < kBitsPerByte) {
        throw InvalidParameter("need lambda > 0, n >= 1 and pl_max of at least one byte");
    }
    const Bits max_bytes = pl_max_bits / kBitsPerByte;
    auto feasible = [&](Bits bytes) {
        return critical_load_at(bytes * kBitsPerByte, n, bit_error_prob, timing) >= lambda;
    };
    if (!feasible(1)) {
        return {kBitsPerByte, true};
    }
    if (feasible(max_bytes)) {
        return {max_bytes * kBitsPerByte, false};
    }
    // lambda_c decreases with payload: keep feasible(lo) && !feasible(hi).
    Bits lo = 1;
    Bits hi = max_bytes;
    while (hi - lo > 1) {
        const Bits mid = lo + (hi - lo) / 2;
        (feasible(mid) ? lo : hi) = mid;
    }
    return {lo * kBitsPerByte, false};
}

OptimizationOutcome optimize(const ScenarioParams& scenario, const ProtocolTiming& timing) {
    scenario.validate();
    const int n = scenario.n_stations;
    const double p_e = scenario.packet_error(timing);
    const auto slots = slot_durations(timing, scenario.payload_bits);

    OptimizationOutcome out;
    out.pl_max_bits = scenario.pl_max_bits;
    out.lambda_c = critical_load(n, p_e, scenario.payload_bits, slots);
    out.region = scenario.saturated ? Region::LC : classify_region(scenario.lambda, out.lambda_c);

    if (out.region == Region::LC) {
        out.w_op_real = optimal_contention_window_real(n, p_e, scenario.m, slots);
        out.w_op = std::max(2, static_cast<int>(std::lround(*out.w_op_real)));
        out.predicted_throughput = link_capacity(n, p_e, scenario.payload_bits, slots);
        out.achieved_pe = p_e;
        return out;
    }

    const double p_b = scenario.bit_error(timing);
    if (scenario.lambda == 0.0) {
        out.payload_step1_bits = scenario.pl_max_bits;
    } else {
        const auto step1 = payload_for_critical_load(scenario.lambda, n, p_b, timing, scenario.pl_max_bits);
        out.payload_step1_bits = step1.payload_bits;
        out.region_shift_warning = step1.region_shift;
    }
    out.payload_step2_bits = max_payload_for_per_target(p_b, scenario.per_target, timing);
    const Bits chosen = std::min({*out.payload_step1_bits, *out.payload_step2_bits, scenario.pl_max_bits});
    out.payload_opt_bits = chosen;
    out.achieved_pe = packet_error_rate(p_b, chosen, timing);

    ScenarioParams tuned = scenario;
    tuned.payload_bits = chosen;
    tuned.bit_error_prob = p_b;
    tuned.packet_error_prob.reset();
    out.predicted_throughput = optimized_throughput_model(tuned, timing);
    return out;
}

ScenarioParams apply_outcome(ScenarioParams scenario, const OptimizationOutcome& outcome,
                             const ProtocolTiming& timing) {
    if (outcome.w_op) {
        scenario.w0 = *outcome.w_op;
    }
    if (outcome.payload_opt_bits) {
        if (!scenario.bit_error_prob && scenario.packet_error_prob) {
            // Keep the channel fixed at bit level so P_e follows the payload.
            scenario.bit_error_prob = scenario.bit_error(timing);
            scenario.packet_error_prob.reset();
        }
        scenario.payload_bits = *outcome.payload_opt_bits;
    }
    return scenario;
}

void write_outcome_csv(std::ostream& out, const OptimizationOutcome& o) {
    out << "region,w_op,payload_step1_B,payload_step2_B,payload_opt_B,achieved_pe,predicted_S_bps\n";
    out << to_string(o.region) << ',' << (o.w_op ? std::to_string(*o.w_op) : "") << ','
        << bytes_or_empty(o.payload_step1_bits) << ',' << bytes_or_empty(o.payload_step2_bits) << ','
        << bytes_or_empty(o.payload_opt_bits) << ',' << num(o.achieved_pe) << ','
        << num(o.predicted_throughput) << '\n';
}

}  // namespace dcf

#include "dcf/throughput.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "dcf/errors.hpp"
#include "dcf/parallel.hpp"

namespace dcf {

namespace {

// Shared denominator pieces of S_m and lambda_c at tau_m.
struct CapacityTerms {
    double per_frame;  // T_s - T_c/(1-P_e) + T_e P_e/(1-P_e)
    double contention; // ((sigma - T_c)(1-tau)^N + T_c) / (tau (1-tau)^(N-1) (1-P_e))
};

CapacityTerms capacity_terms(int n, double p_e, const SlotDurations& slots) {
    const double tau = tau_star(n, slots.sigma, slots.t_collision);
    const double ok = 1.0 - p_e;
    const double per_frame = slots.t_success - slots.t_collision / ok + slots.t_error * p_e / ok;
    const double busy_or_idle =
        (slots.sigma - slots.t_collision) * std::pow(1.0 - tau, n) + slots.t_collision;
    const double contention = busy_or_idle / (tau * std::pow(1.0 - tau, n - 1) * ok);
    return {per_frame, contention};
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string_view to_string(Region region) { return region == Region::BLC ? "BLC" : "LC"; }

double throughput(const EquilibriumSolution& solution, Bits payload_bits, double p_e,
                  const SlotDurations& /*slots*/) {
    if (solution.tau == 0.0) {
        return 0.0;
    }
    const double success = success_slot_prob(solution.tau, solution.n_stations);
    return success * (1.0 - p_e) * static_cast<double>(payload_bits) / solution.expected_slot;
}

double throughput_at_tau(double tau, int n, double p_e, Bits payload_bits,
                         const SlotDurations& slots) {
    if (tau == 0.0) {
        return 0.0;
    }
    return success_slot_prob(tau, n) * (1.0 - p_e) * static_cast<double>(payload_bits) /
           expected_slot_time(tau, n, p_e, slots);
}

double linear_blc_model(int n, Bits payload_bits, double lambda) {
    return static_cast<double>(n) * static_cast<double>(payload_bits) * lambda;
}

double tau_star(int n, double sigma, double t_collision) {
    if (n < 1 || !(sigma > 0.0) || !(t_collision > 0.0)) {
        throw InvalidParameter("tau_star needs n >= 1 and positive sigma, T_c");
    }
    if (n == 1) {
        return 1.0;
    }
    // Rationalised form of (sigma - sqrt(sigma [N sigma - 2(N-1)(sigma-T_c)] / N)) / ((N-1)(sigma-T_c));
    // finite at sigma == T_c where it equals 1/N.
    const double nn = static_cast<double>(n);
    const double discriminant = sigma * (nn * sigma - 2.0 * (nn - 1.0) * (sigma - t_collision)) / nn;
    if (discriminant < 0.0) {
        throw std::logic_error("tau_star: negative discriminant");
    }
    return 2.0 * sigma / (nn * (sigma + std::sqrt(discriminant)));
}

double link_capacity(int n, double p_e, Bits payload_bits, const SlotDurations& slots) {
    if (!(p_e >= 0.0 && p_e <= 1.0)) {
        throw InvalidParameter("P_e must lie in [0,1]");
    }
    if (p_e >= 1.0) {
        return 0.0;
    }
    const auto terms = capacity_terms(n, p_e, slots);
    return static_cast<double>(payload_bits) / (terms.per_frame + terms.contention / n);
}

double critical_load(int n, double p_e, Bits payload_bits, const SlotDurations& slots) {
    if (!(p_e >= 0.0 && p_e <= 1.0)) {
        throw InvalidParameter("P_e must lie in [0,1]");
    }
    if (payload_bits <= 0) {
        throw InvalidParameter("payload must be positive");
    }
    if (p_e >= 1.0) {
        return 0.0;
    }
    const auto terms = capacity_terms(n, p_e, slots);
    return 1.0 / (n * terms.per_frame + terms.contention);
}

Region classify_region(double lambda, double lambda_c) {
    return lambda <= lambda_c ? Region::BLC : Region::LC;
}

double optimized_throughput_model(const ScenarioParams& scenario, const ProtocolTiming& timing) {
    scenario.validate();
    const double p_e = scenario.packet_error(timing);
    const auto slots = slot_durations(timing, scenario.payload_bits);
    const double lambda_c = critical_load(scenario.n_stations, p_e, scenario.payload_bits, slots);
    if (!scenario.saturated && classify_region(scenario.lambda, lambda_c) == Region::BLC) {
        return linear_blc_model(scenario.n_stations, scenario.payload_bits, scenario.lambda);
    }
    return link_capacity(scenario.n_stations, p_e, scenario.payload_bits, slots);
}

OperatingPoint operating_point(const ScenarioParams& scenario, const ProtocolTiming& timing,
                               const SolverSettings& settings) {
    return operating_point(scenario, timing, solve_equilibrium(scenario, timing, settings));
}

OperatingPoint operating_point(const ScenarioParams& scenario, const ProtocolTiming& timing,
                               const EquilibriumSolution& solution) {
    const auto slots = slot_durations(timing, scenario.payload_bits);
    const int n = scenario.n_stations;

    OperatingPoint p;
    p.tau_m = tau_star(n, slots.sigma, slots.t_collision);
    p.s_m = link_capacity(n, solution.p_e, scenario.payload_bits, slots);
    p.lambda_c = critical_load(n, solution.p_e, scenario.payload_bits, slots);
    p.region = scenario.saturated ? Region::LC : classify_region(scenario.lambda, p.lambda_c);
    p.throughput = throughput(solution, scenario.payload_bits, solution.p_e, slots);
    return p;
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::Lambda:
        return "lambda";
    case SweepAxis::W0:
        return "w0";
    case SweepAxis::Payload:
        return "payload";
    case SweepAxis::N:
        return "n";
    }
    return "lambda";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
    if (name == "lambda") return SweepAxis::Lambda;
    if (name == "w0") return SweepAxis::W0;
    if (name == "payload") return SweepAxis::Payload;
    if (name == "n") return SweepAxis::N;
    throw ConfigError("unknown sweep axis '" + std::string(name) +
                      "' (expected lambda, w0, payload or n)");
}

ScenarioParams apply_axis(ScenarioParams scenario, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::Lambda:
        scenario.lambda = value;
        scenario.saturated = false;
        break;
    case SweepAxis::W0:
        scenario.w0 = static_cast<int>(std::lround(value));
        break;
    case SweepAxis::Payload:
        scenario.payload_bits = static_cast<Bits>(std::llround(value * kBitsPerByte));
        break;
    case SweepAxis::N:
        scenario.n_stations = static_cast<int>(std::lround(value));
        break;
    }
    return scenario;
}

std::vector<SweepRow> sweep(const ScenarioParams& scenario, const ProtocolTiming& timing,
                            SweepAxis axis, const std::vector<double>& grid,
                            const SolverSettings& settings, int jobs) {
    std::vector<SweepRow> rows(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
        const auto point = apply_axis(scenario, axis, grid[i]);
        rows[i].axis_value = grid[i];
        rows[i].solution = solve_equilibrium(point, timing, settings);
        rows[i].point = operating_point(point, timing, rows[i].solution);
    });
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "axis_value,tau,p_col,p_eq,q,E_slot_s,S_bps,tau_m,S_m_bps,lambda_c_pps,region\n";
    for (const auto& r : rows) {
        const auto& s = r.solution;
        const auto& p = r.point;
        out << num(r.axis_value) << ',' << num(s.tau) << ',' << num(s.p_col) << ',' << num(s.p_eq)
            << ',' << num(s.q) << ',' << num(s.expected_slot) << ',' << num(p.throughput) << ','
            << num(p.tau_m) << ',' << num(p.s_m) << ',' << num(p.lambda_c) << ','
            << to_string(p.region) << '\n';
    }
}

}  // namespace dcf

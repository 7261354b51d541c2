#include "dcf/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "dcf/errors.hpp"

namespace dcf {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) {
        throw InvalidParameter(msg);
    }
}

// Everything the composed map needs, resolved once per solve.
struct FixedPointMap {
    int n;
    int w0;
    int m;
    double lambda;
    bool saturated;
    double p_e;
    SlotDurations slots;

    EquilibriumSolution evaluate(double tau) const {
        EquilibriumSolution s;
        s.n_stations = n;
        s.p_e = p_e;
        s.tau = tau;
        s.p_col = collision_prob(tau, n);
        s.p_eq = equivalent_failure_prob(s.p_col, p_e);
        s.expected_slot = expected_slot_time(tau, n, p_e, slots);
        s.q = saturated ? 1.0 : queue_nonempty_prob(lambda, s.expected_slot);
        return s;
    }

    double image(double tau) const {
        const auto s = evaluate(tau);
        return tau_closed_form(s.p_eq, s.q, w0, m);
    }

    double gap(double tau) const { return tau - image(tau); }
};

// Bisection on gap() inside [lo, hi] with gap(lo) <= 0 < gap(hi).
double bisect(const FixedPointMap& f, double lo, double hi, double tolerance, int& iterations) {
    for (int it = 0; it < 200; ++it) {
        ++iterations;
        const double mid = 0.5 * (lo + hi);
        const double g = f.gap(mid);
        if (std::abs(g) <= 0.5 * tolerance || hi - lo <= 4 * std::numeric_limits<double>::epsilon()) {
            return mid;
        }
        (g > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void SolverSettings::validate() const {
    require(tolerance > 0.0, "solver tolerance must be positive");
    require(max_iterations > 0, "max_iterations must be positive");
    require(damping > 0.0 && damping <= 1.0, "damping must lie in (0,1]");
    require(root_scan_points == 0 || root_scan_points >= 2, "root_scan_points must be 0 or >= 2");
}

double tau_closed_form(double p_eq, double q, int w0, int m) {
    require(p_eq >= 0.0 && p_eq <= 1.0, "P_eq must lie in [0,1]");
    require(q >= 0.0 && q <= 1.0, "q must lie in [0,1]");
    require(w0 >= 1 && m >= 0, "need w0 >= 1 and m >= 0");
    if (q == 0.0) {
        return 0.0;
    }
    // (1 - (2P)^m) / (1 - 2P) as a finite sum.
    double geometric = 0.0;
    double term = 1.0;
    for (int i = 0; i < m; ++i) {
        geometric += term;
        term *= 2.0 * p_eq;
    }
    const double w = static_cast<double>(w0);
    const double denom = q * ((w + 1.0) + w * p_eq * geometric) + 2.0 * (1.0 - q) * (1.0 - p_eq);
    return 2.0 * q / denom;
}

double tau_saturated(double p_eq, int w0, int m) { return tau_closed_form(p_eq, 1.0, w0, m); }

double collision_prob(double tau, int n) {
    require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0,1]");
    require(n >= 1, "n must be >= 1");
    return 1.0 - std::pow(1.0 - tau, n - 1);
}

double equivalent_failure_prob(double p_col, double p_e) {
    require(p_col >= 0.0 && p_col <= 1.0 && p_e >= 0.0 && p_e <= 1.0,
            "probabilities must lie in [0,1]");
    return p_col + p_e - p_e * p_col;
}

double success_slot_prob(double tau, int n) {
    require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0,1]");
    require(n >= 1, "n must be >= 1");
    return n * tau * std::pow(1.0 - tau, n - 1);
}

double expected_slot_time(double tau, int n, double p_e, const SlotDurations& slots) {
    require(p_e >= 0.0 && p_e <= 1.0, "P_e must lie in [0,1]");
    const double p_idle = std::pow(1.0 - tau, n);
    const double p_single = success_slot_prob(tau, n);  // P_t P_s
    const double p_busy = 1.0 - p_idle;                  // P_t
    return p_idle * slots.sigma + (p_busy - p_single) * slots.t_collision +
           p_single * (1.0 - p_e) * slots.t_success + p_single * p_e * slots.t_error;
}

double queue_nonempty_prob(double lambda, double expected_slot) {
    require(lambda >= 0.0 && expected_slot >= 0.0, "lambda and E[S_ts] must be non-negative");
    if (std::isinf(lambda)) {
        return 1.0;
    }
    return -std::expm1(-lambda * expected_slot);
}

double queue_nonempty_prob_linear(double lambda, double expected_slot) {
    require(lambda >= 0.0 && expected_slot >= 0.0, "lambda and E[S_ts] must be non-negative");
    return lambda * expected_slot;
}

EquilibriumSolution solve_equilibrium(const ScenarioParams& scenario, const ProtocolTiming& timing,
                                      const SolverSettings& settings) {
    scenario.validate();
    settings.validate();

    const FixedPointMap f{scenario.n_stations,
                          scenario.w0,
                          scenario.m,
                          scenario.lambda,
                          scenario.saturated || std::isinf(scenario.lambda),
                          scenario.packet_error(timing),
                          slot_durations(timing, scenario.payload_bits)};

    int iterations = 0;
    bool used_bisection = false;
    double tau = 0.0;
    bool converged = false;

    // Damped Picard sweep over tau -> P_col -> P_eq -> E[S_ts] -> q -> tau'.
    while (iterations < settings.max_iterations) {
        ++iterations;
        const double next = f.image(tau);
        if (std::abs(next - tau) <= settings.tolerance) {
            tau = next;
            if (std::abs(f.gap(tau)) <= settings.tolerance) {
                converged = true;
                break;
            }
        } else {
            tau = (1.0 - settings.damping) * tau + settings.damping * next;
        }
    }

    if (!converged) {
        // gap(0) <= 0 and gap(1) >= 0 always: tau' never exceeds 2/(W0+1).
        used_bisection = true;
        tau = bisect(f, 0.0, 1.0, settings.tolerance, iterations);
    }

    bool multiple_roots = false;
    if (settings.root_scan_points > 0) {
        const int points = settings.root_scan_points;
        int sign_changes = 0;
        double first_lo = 0.0;
        double first_hi = 0.0;
        double prev_tau = 0.0;
        bool prev_positive = f.gap(0.0) > 0.0;
        for (int j = 1; j < points; ++j) {
            const double t = static_cast<double>(j) / (points - 1);
            const bool positive = f.gap(t) > 0.0;
            if (positive != prev_positive) {
                if (sign_changes == 0) {
                    first_lo = prev_tau;
                    first_hi = t;
                }
                ++sign_changes;
            }
            prev_positive = positive;
            prev_tau = t;
        }
        if (sign_changes > 1) {
            multiple_roots = true;
            if (tau > first_hi) {
                tau = bisect(f, first_lo, first_hi, settings.tolerance, iterations);
                used_bisection = true;
            }
        }
    }

    EquilibriumSolution s = f.evaluate(tau);
    s.iterations = iterations;
    s.used_bisection = used_bisection;
    s.multiple_roots = multiple_roots;
    const auto r = equilibrium_residuals(s, scenario, timing);
    s.residual = *std::max_element(r.begin(), r.end());
    if (!(s.residual <= settings.tolerance)) {
        std::ostringstream os;
        os << "fixed point not found within tolerance " << settings.tolerance << " after "
           << iterations << " iterations (residual " << s.residual << ")";
        throw SolverFailure(os.str(), s.residual);
    }
    return s;
}

std::array<double, 4> equilibrium_residuals(const EquilibriumSolution& s,
                                            const ScenarioParams& scenario,
                                            const ProtocolTiming& timing) {
    const int n = scenario.n_stations;
    const double p_e = scenario.packet_error(timing);
    const auto slots = slot_durations(timing, scenario.payload_bits);
    const bool saturated = scenario.saturated || std::isinf(scenario.lambda);

    const double eq1 = s.p_col + p_e - p_e * s.p_col;
    const double eq2 = tau_closed_form(std::clamp(s.p_eq, 0.0, 1.0), std::clamp(s.q, 0.0, 1.0),
                                       scenario.w0, scenario.m);
    const double eq3 = 1.0 - std::pow(1.0 - s.tau, n - 1);
    const double slot = expected_slot_time(s.tau, n, p_e, slots);
    const double eq4 = saturated ? 1.0 : 1.0 - std::exp(-scenario.lambda * slot);
    return {std::abs(s.p_eq - eq1), std::abs(s.tau - eq2), std::abs(s.p_col - eq3),
            std::max(std::abs(s.q - eq4), std::abs(s.expected_slot - slot) / slot)};
}

std::size_t chain_state_count(int w0, int m) {
    std::size_t count = 1;
    for (int i = 0; i <= m; ++i) {
        count += (static_cast<std::size_t>(1) << i) * static_cast<std::size_t>(w0);
    }
    return count;
}

double stationary_distribution_oracle(double p_eq, double q, int w0, int m,
                                      std::size_t max_states) {
    require(p_eq >= 0.0 && p_eq <= 1.0, "P_eq must lie in [0,1]");
    require(q >= 0.0 && q <= 1.0, "q must lie in [0,1]");
    require(w0 >= 1 && m >= 0 && m < 20, "need w0 >= 1 and 0 <= m < 20");
    const std::size_t n = chain_state_count(w0, m);
    require(n <= max_states, "chain exceeds the oracle state cap");

    // State 0 is idle; (i,k) lives at offset[i] + k.
    std::vector<Eigen::Index> offset(static_cast<std::size_t>(m) + 1);
    std::vector<Eigen::Index> window(static_cast<std::size_t>(m) + 1);
    Eigen::Index next = 1;
    for (int i = 0; i <= m; ++i) {
        offset[i] = next;
        window[i] = static_cast<Eigen::Index>(w0) << i;
        next += window[i];
    }
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(size, size);

    auto enter_stage = [&](Eigen::Index from, int stage, double prob) {
        for (Eigen::Index k = 0; k < window[stage]; ++k) {
            transition(from, offset[stage] + k) += prob / static_cast<double>(window[stage]);
        }
    };

    transition(0, 0) += 1.0 - q;
    enter_stage(0, 0, q);
    for (int i = 0; i <= m; ++i) {
        for (Eigen::Index k = 1; k < window[i]; ++k) {
            transition(offset[i] + k, offset[i] + k - 1) += 1.0;
        }
        const Eigen::Index head = offset[i];
        enter_stage(head, std::min(i + 1, m), p_eq);
        enter_stage(head, 0, (1.0 - p_eq) * q);
        transition(head, 0) += (1.0 - p_eq) * (1.0 - q);
    }

    // pi (T - I) = 0 with one balance equation replaced by sum(pi) = 1.
    Eigen::MatrixXd system = transition.transpose() - Eigen::MatrixXd::Identity(size, size);
    system.row(0).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    rhs(0) = 1.0;
    const Eigen::VectorXd pi = system.partialPivLu().solve(rhs);

    double tau = 0.0;
    for (int i = 0; i <= m; ++i) {
        tau += pi(offset[i]);
    }
    return tau;
}

}  // namespace dcf

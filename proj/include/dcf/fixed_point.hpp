#pragma once

// Per-station transmission probability under non-saturated traffic and
// channel errors: the coupled system tau <-> P_col <-> P_eq <-> E[S_ts] <-> q.

#include <array>
#include <cstddef>

#include "dcf/protocol.hpp"

namespace dcf {

struct SolverSettings {
    double tolerance = 1e-10;
    int max_iterations = 10000;
    double damping = 0.5;
    // Grid size for the post-convergence multiple-root scan; 0 disables it.
    int root_scan_points = 10000;

    void validate() const;
};

struct EquilibriumSolution {
    int n_stations = 0;
    double p_e = 0.0;
    double tau = 0.0;
    double p_col = 0.0;
    double p_eq = 0.0;
    double q = 0.0;
    double expected_slot = 0.0;  // seconds
    double residual = 0.0;
    int iterations = 0;
    bool used_bisection = false;
    // Set when the root scan found more than one fixed point; the
    // smallest one is reported.
    bool multiple_roots = false;
};

/// Stationary tau of the (i,k)+idle backoff chain. Evaluated through the
/// finite sum over (2 P_eq)^i, so P_eq = 1/2 needs no special case.
double tau_closed_form(double p_eq, double q, int w0, int m);

/// tau_closed_form with q = 1.
double tau_saturated(double p_eq, int w0, int m);

/// 1 - (1 - tau)^(n-1).
double collision_prob(double tau, int n);

/// P_col + P_e - P_e * P_col.
double equivalent_failure_prob(double p_col, double p_e);

/// N tau (1 - tau)^(N-1).
double success_slot_prob(double tau, int n);

/// E[S_ts]: mean real duration of a virtual slot.
double expected_slot_time(double tau, int n, double p_e, const SlotDurations& slots);

/// q = 1 - exp(-lambda E[S_ts]).
double queue_nonempty_prob(double lambda, double expected_slot);

/// Small-load linearisation lambda E[S_ts]; only used for the linear
/// throughput law.
double queue_nonempty_prob_linear(double lambda, double expected_slot);

/// Solves the fixed point for one scenario. Throws SolverFailure when no
/// point within tolerance is found.
EquilibriumSolution solve_equilibrium(const ScenarioParams& scenario, const ProtocolTiming& timing,
                                      const SolverSettings& settings = {});

/// Absolute defects of the four defining relations at `s`, recomputed
/// from scratch: {P_eq, tau, P_col, q}.
std::array<double, 4> equilibrium_residuals(const EquilibriumSolution& s,
                                            const ScenarioParams& scenario,
                                            const ProtocolTiming& timing);

/// Builds the full backoff chain as a stochastic matrix, solves for its
/// stationary distribution by LU elimination and returns sum_i b_{i,0}.
/// Throws InvalidParameter if the chain exceeds `max_states`.
double stationary_distribution_oracle(double p_eq, double q, int w0, int m,
                                      std::size_t max_states = 4096);

/// 1 + sum_{i=0..m} 2^i w0.
std::size_t chain_state_count(int w0, int m);

}  // namespace dcf

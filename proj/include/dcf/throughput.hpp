#pragma once

// Aggregate throughput, the low-load linear law and the closed-form link
// capacity quantities (tau_m, S_m, lambda_c).

#include <iosfwd>
#include <string_view>
#include <vector>

#include "dcf/fixed_point.hpp"
#include "dcf/protocol.hpp"

namespace dcf {

/// BLC: below link capacity (lambda <= lambda_c); LC: at link capacity.
enum class Region { BLC, LC };

std::string_view to_string(Region region);

struct OperatingPoint {
    double tau_m = 0.0;
    double s_m = 0.0;       // bit/s
    double lambda_c = 0.0;  // packets/s per station
    Region region = Region::BLC;
    double throughput = 0.0;  // bit/s at the solved equilibrium
};

/// S = P_t P_s (1 - P_e) E[PL] / E[S_ts].
double throughput(const EquilibriumSolution& solution, Bits payload_bits, double p_e,
                  const SlotDurations& slots);

/// Throughput as a function of tau alone (the quantity tau_m maximises).
double throughput_at_tau(double tau, int n, double p_e, Bits payload_bits,
                         const SlotDurations& slots);

/// S = N E[PL] lambda.
double linear_blc_model(int n, Bits payload_bits, double lambda);

/// Throughput-maximising tau for n contending stations. tau_m(1) = 1.
double tau_star(int n, double sigma, double t_collision);

/// S_m: throughput at tau_m.
double link_capacity(int n, double p_e, Bits payload_bits, const SlotDurations& slots);

/// lambda_c: load at which N E[PL] lambda reaches S_m.
double critical_load(int n, double p_e, Bits payload_bits, const SlotDurations& slots);

/// BLC iff lambda <= lambda_c.
Region classify_region(double lambda, double lambda_c);

/// N E[PL] lambda below lambda_c, S_m above.
double optimized_throughput_model(const ScenarioParams& scenario, const ProtocolTiming& timing);

/// Solves the scenario and fills every OperatingPoint field.
OperatingPoint operating_point(const ScenarioParams& scenario, const ProtocolTiming& timing,
                               const SolverSettings& settings = {});

/// Same, from an already solved equilibrium of `scenario`.
OperatingPoint operating_point(const ScenarioParams& scenario, const ProtocolTiming& timing,
                               const EquilibriumSolution& solution);

enum class SweepAxis { Lambda, W0, Payload, N };

std::string_view to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(std::string_view name);

/// Copy of `scenario` with the swept parameter set to `value`
/// (payload values are in bytes).
ScenarioParams apply_axis(ScenarioParams scenario, SweepAxis axis, double value);

struct SweepRow {
    double axis_value = 0.0;
    EquilibriumSolution solution;
    OperatingPoint point;
};

/// One solved row per grid value, in grid order. `jobs` > 1 solves rows
/// on a worker pool.
std::vector<SweepRow> sweep(const ScenarioParams& scenario, const ProtocolTiming& timing,
                            SweepAxis axis, const std::vector<double>& grid,
                            const SolverSettings& settings = {}, int jobs = 1);

/// Header: axis_value,tau,p_col,p_eq,q,E_slot_s,S_bps,tau_m,S_m_bps,lambda_c_pps,region
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace dcf

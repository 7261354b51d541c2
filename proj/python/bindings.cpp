#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dcf/errors.hpp"
#include "dcf/fixed_point.hpp"
#include "dcf/optimizer.hpp"
#include "dcf/scenarios.hpp"
#include "dcf/simulator.hpp"
#include "dcf/throughput.hpp"

namespace py = pybind11;
using namespace dcf;

namespace {

SimMetrics simulate(const ScenarioParams& scenario, const ProtocolTiming& timing, std::uint64_t seed,
                    double duration, double warmup, int queue_capacity, double window, bool post_backoff) {
    SimConfig c;
    c.scenario = scenario;
    c.timing = timing;
    c.seed = seed;
    c.duration = duration;
    c.warmup = warmup;
    c.queue_capacity = queue_capacity;
    c.window = window;
    c.variant = post_backoff ? BackoffVariant::PostBackoff : BackoffVariant::IdleState;
    py::gil_scoped_release release;
    return run(c);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Non-saturated IEEE 802.11 DCF model: fixed point, capacity, optimizer, simulator";

    py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);
    py::register_exception<InfeasibleTarget>(m, "InfeasibleTarget", PyExc_RuntimeError);
    py::register_exception<InfeasibleWindow>(m, "InfeasibleWindow", PyExc_RuntimeError);

    py::enum_<BusyTail>(m, "BusyTail")
        .value("DIFS", BusyTail::Difs)
        .value("EIFS", BusyTail::Eifs)
        .value("ACK_TIMEOUT", BusyTail::AckTimeout);

    py::class_<ProtocolTiming>(m, "ProtocolTiming")
        .def(py::init<>())
        .def_readwrite("sigma", &ProtocolTiming::sigma)
        .def_readwrite("sifs", &ProtocolTiming::sifs)
        .def_readwrite("difs", &ProtocolTiming::difs)
        .def_readwrite("eifs", &ProtocolTiming::eifs)
        .def_readwrite("ack_timeout", &ProtocolTiming::ack_timeout)
        .def_readwrite("cts_timeout", &ProtocolTiming::cts_timeout)
        .def_readwrite("prop_delay", &ProtocolTiming::prop_delay)
        .def_readwrite("mac_header_bits", &ProtocolTiming::mac_header_bits)
        .def_readwrite("phy_header_bits", &ProtocolTiming::phy_header_bits)
        .def_readwrite("ack_bits", &ProtocolTiming::ack_bits)
        .def_readwrite("data_rate", &ProtocolTiming::data_rate)
        .def_readwrite("control_rate", &ProtocolTiming::control_rate)
        .def_readwrite("per_overhead_bits", &ProtocolTiming::per_overhead_bits)
        .def_readwrite("collision_tail", &ProtocolTiming::collision_tail)
        .def_readwrite("error_tail", &ProtocolTiming::error_tail)
        .def_readwrite("ack_has_phy_header", &ProtocolTiming::ack_has_phy_header)
        .def("validate", &ProtocolTiming::validate);

    m.def("timing_profile", [](const std::string& name) { return timing_profile(name); }, py::arg("name"));
    m.def("timing_profile_names", &timing_profile_names);

    py::class_<SlotDurations>(m, "SlotDurations")
        .def_readonly("t_success", &SlotDurations::t_success)
        .def_readonly("t_collision", &SlotDurations::t_collision)
        .def_readonly("t_error", &SlotDurations::t_error)
        .def_readonly("sigma", &SlotDurations::sigma);
    m.def("slot_durations", &slot_durations, py::arg("timing"), py::arg("payload_bits"));

    m.def("packet_error_rate", &packet_error_rate, py::arg("bit_error_prob"), py::arg("payload_bits"),
          py::arg("timing") = ProtocolTiming{});
    m.def("max_payload_for_per_target", &max_payload_for_per_target, py::arg("bit_error_prob"),
          py::arg("per_target"), py::arg("timing") = ProtocolTiming{},
          "Payload bits; the unbounded sentinel when bit_error_prob == 0.");
    m.attr("UNBOUNDED_PAYLOAD") = kUnboundedPayload;

    py::class_<ScenarioParams>(m, "ScenarioParams")
        .def(py::init<>())
        .def_readwrite("n_stations", &ScenarioParams::n_stations)
        .def_readwrite("lambda_pps", &ScenarioParams::lambda)
        .def_readwrite("saturated", &ScenarioParams::saturated)
        .def_readwrite("w0", &ScenarioParams::w0)
        .def_readwrite("m", &ScenarioParams::m)
        .def_readwrite("payload_bits", &ScenarioParams::payload_bits)
        .def_readwrite("bit_error_prob", &ScenarioParams::bit_error_prob)
        .def_readwrite("packet_error_prob", &ScenarioParams::packet_error_prob)
        .def_readwrite("per_target", &ScenarioParams::per_target)
        .def_readwrite("pl_max_bits", &ScenarioParams::pl_max_bits)
        .def("validate", &ScenarioParams::validate)
        .def("packet_error", &ScenarioParams::packet_error, py::arg("timing") = ProtocolTiming{});

    py::class_<SolverSettings>(m, "SolverSettings")
        .def(py::init<>())
        .def_readwrite("tolerance", &SolverSettings::tolerance)
        .def_readwrite("max_iterations", &SolverSettings::max_iterations)
        .def_readwrite("damping", &SolverSettings::damping)
        .def_readwrite("root_scan_points", &SolverSettings::root_scan_points);

    py::class_<EquilibriumSolution>(m, "EquilibriumSolution")
        .def_readonly("n_stations", &EquilibriumSolution::n_stations)
        .def_readonly("p_e", &EquilibriumSolution::p_e)
        .def_readonly("tau", &EquilibriumSolution::tau)
        .def_readonly("p_col", &EquilibriumSolution::p_col)
        .def_readonly("p_eq", &EquilibriumSolution::p_eq)
        .def_readonly("q", &EquilibriumSolution::q)
        .def_readonly("expected_slot", &EquilibriumSolution::expected_slot)
        .def_readonly("residual", &EquilibriumSolution::residual)
        .def_readonly("iterations", &EquilibriumSolution::iterations)
        .def_readonly("used_bisection", &EquilibriumSolution::used_bisection)
        .def_readonly("multiple_roots", &EquilibriumSolution::multiple_roots);

    m.def("tau_closed_form", &tau_closed_form, py::arg("p_eq"), py::arg("q"), py::arg("w0"), py::arg("m"));
    m.def("stationary_distribution_oracle", &stationary_distribution_oracle, py::arg("p_eq"), py::arg("q"),
          py::arg("w0"), py::arg("m"), py::arg("max_states") = 4096);
    m.def("solve_equilibrium", &solve_equilibrium, py::arg("scenario"), py::arg("timing") = ProtocolTiming{},
          py::arg("settings") = SolverSettings{});

    py::enum_<Region>(m, "Region").value("BLC", Region::BLC).value("LC", Region::LC);

    py::class_<OperatingPoint>(m, "OperatingPoint")
        .def_readonly("tau_m", &OperatingPoint::tau_m)
        .def_readonly("s_m", &OperatingPoint::s_m)
        .def_readonly("lambda_c", &OperatingPoint::lambda_c)
        .def_readonly("region", &OperatingPoint::region)
        .def_readonly("throughput", &OperatingPoint::throughput);

    m.def("tau_star", &tau_star, py::arg("n"), py::arg("sigma"), py::arg("t_collision"));
    m.def("link_capacity", &link_capacity, py::arg("n"), py::arg("p_e"), py::arg("payload_bits"),
          py::arg("slots"));
    m.def("critical_load", &critical_load, py::arg("n"), py::arg("p_e"), py::arg("payload_bits"),
          py::arg("slots"));
    m.def(
        "operating_point",
        [](const ScenarioParams& s, const ProtocolTiming& t, const SolverSettings& st) {
            return operating_point(s, t, st);
        },
        py::arg("scenario"), py::arg("timing") = ProtocolTiming{}, py::arg("settings") = SolverSettings{});

    py::class_<OptimizationOutcome>(m, "OptimizationOutcome")
        .def_readonly("region", &OptimizationOutcome::region)
        .def_readonly("lambda_c", &OptimizationOutcome::lambda_c)
        .def_readonly("w_op", &OptimizationOutcome::w_op)
        .def_readonly("w_op_real", &OptimizationOutcome::w_op_real)
        .def_readonly("payload_opt_bits", &OptimizationOutcome::payload_opt_bits)
        .def_readonly("payload_step1_bits", &OptimizationOutcome::payload_step1_bits)
        .def_readonly("payload_step2_bits", &OptimizationOutcome::payload_step2_bits)
        .def_readonly("pl_max_bits", &OptimizationOutcome::pl_max_bits)
        .def_readonly("predicted_throughput", &OptimizationOutcome::predicted_throughput)
        .def_readonly("achieved_pe", &OptimizationOutcome::achieved_pe)
        .def_readonly("region_shift_warning", &OptimizationOutcome::region_shift_warning);

    m.def("optimal_contention_window", &optimal_contention_window, py::arg("n"), py::arg("p_e"), py::arg("m"),
          py::arg("slots"));
    m.def("optimize", &optimize, py::arg("scenario"), py::arg("timing") = ProtocolTiming{});

    py::class_<SlotTally>(m, "SlotTally")
        .def_readonly("idle", &SlotTally::idle)
        .def_readonly("success", &SlotTally::success)
        .def_readonly("collision", &SlotTally::collision)
        .def_readonly("error", &SlotTally::error)
        .def("total", &SlotTally::total);

    py::class_<StationStats>(m, "StationStats")
        .def_readonly("generated", &StationStats::generated)
        .def_readonly("delivered", &StationStats::delivered)
        .def_readonly("collided", &StationStats::collided)
        .def_readonly("errored", &StationStats::errored)
        .def_readonly("dropped", &StationStats::dropped)
        .def_readonly("attempts", &StationStats::attempts)
        .def_readonly("in_queue", &StationStats::in_queue);

    py::class_<WindowSample>(m, "WindowSample")
        .def_readonly("t_start", &WindowSample::t_start)
        .def_readonly("t_end", &WindowSample::t_end)
        .def_readonly("throughput_bps", &WindowSample::throughput_bps);

    py::class_<SimMetrics>(m, "SimMetrics")
        .def_readonly("seed", &SimMetrics::seed)
        .def_readonly("sim_time_s", &SimMetrics::sim_time_s)
        .def_readonly("delivered_payload_bits", &SimMetrics::delivered_payload_bits)
        .def_readonly("aggregate_throughput_bps", &SimMetrics::aggregate_throughput_bps)
        .def_readonly("slots", &SimMetrics::slots)
        .def_readonly("measured_tau", &SimMetrics::measured_tau)
        .def_readonly("measured_p_col", &SimMetrics::measured_p_col)
        .def_readonly("stations", &SimMetrics::stations)
        .def_readonly("trace", &SimMetrics::trace);

    m.def("simulate", &simulate, py::arg("scenario"), py::arg("timing") = ProtocolTiming{},
          py::arg("seed") = 1, py::arg("duration") = 100.0, py::arg("warmup") = 0.0,
          py::arg("queue_capacity") = 2, py::arg("window") = 0.0, py::arg("post_backoff") = false,
          "Runs the slot-level simulator once and returns its metrics.");
}

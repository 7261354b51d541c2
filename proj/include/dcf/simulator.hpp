#pragma once

// Slot-level simulation of N DCF stations (basic access) with Poisson
// sources, finite queues, per-packet Bernoulli channel errors and binary
// exponential backoff without a retry limit.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dcf/protocol.hpp"
#include "dcf/rng.hpp"

namespace dcf {

/// Simulation clock unit.
using Ticks = std::int64_t;
constexpr double kTicksPerSecond = 1e12;

Ticks to_ticks(double seconds);
double to_seconds(Ticks ticks);

/// What a station does after a success that empties its queue.
enum class BackoffVariant {
    IdleState,    // go idle; the next arrival draws a fresh stage-0 counter
    PostBackoff,  // count down a stage-0 counter first; arrivals after it transmit at once
};

struct TimelineEvent {
    double time = 0.0;
    int station = 0;
    bool on = true;
};

/// Network-wide parameter change (e.g. the optimizer's choice for an interval).
struct Reconfiguration {
    double time = 0.0;
    std::optional<int> w0;
    std::optional<Bits> payload_bits;
};

struct SimConfig {
    ScenarioParams scenario;
    ProtocolTiming timing;
    std::uint64_t seed = 1;
    double duration = 100.0;  // seconds
    double warmup = 0.0;      // seconds excluded from metrics
    int queue_capacity = 2;   // packets, head of line included
    std::vector<TimelineEvent> timeline;
    std::vector<Reconfiguration> reconfigurations;
    double window = 0.0;  // throughput trace window, seconds; 0 disables
    BackoffVariant variant = BackoffVariant::IdleState;

    /// Throws ConfigError.
    void validate() const;
};

struct SlotTally {
    std::int64_t idle = 0;
    std::int64_t success = 0;
    std::int64_t collision = 0;
    std::int64_t error = 0;

    std::int64_t total() const { return idle + success + collision + error; }
    bool operator==(const SlotTally&) const = default;
};

/// Slot durations in ticks together with how many slots ran at them.
struct SlotSegment {
    Ticks sigma = 0;
    Ticks success = 0;
    Ticks collision = 0;
    Ticks error = 0;
    SlotTally count;

    Ticks elapsed() const;
};

struct StationStats {
    std::int64_t generated = 0;
    std::int64_t delivered = 0;
    std::int64_t collided = 0;
    std::int64_t errored = 0;
    std::int64_t dropped = 0;
    std::int64_t attempts = 0;
    std::int64_t in_queue = 0;  // at the end of the run
};

struct WindowSample {
    double t_start = 0.0;
    double t_end = 0.0;
    double throughput_bps = 0.0;
};

struct SimMetrics {
    std::uint64_t seed = 0;
    double sim_time_s = 0.0;
    double measure_start_s = 0.0;
    double delivered_payload_bits = 0.0;  // after warmup
    double aggregate_throughput_bps = 0.0;
    SlotTally slots;           // whole run
    SlotTally measured_slots;  // after warmup
    std::int64_t measured_attempts = 0;
    std::int64_t measured_collided_attempts = 0;
    int n_stations = 0;
    double measured_tau = 0.0;
    double measured_p_col = 0.0;
    std::vector<StationStats> stations;
    std::vector<SlotSegment> segments;
    std::vector<WindowSample> trace;
};

enum class SlotKind { Idle, Success, Collision, Error };

struct SlotOutcome {
    SlotKind kind = SlotKind::Idle;
    int transmitters = 0;
    Ticks duration = 0;
};

enum class StationMode { Idle, Backoff, PostBackoff };

struct StationState {
    int id = 0;
    StationMode mode = StationMode::Idle;
    bool active = true;
    int stage = 0;
    std::int64_t counter = 0;
    int queue = 0;
    Ticks next_arrival = 0;
    CounterRng rng{0, 0};
    StationStats stats;
};

class Simulator {
public:
    explicit Simulator(SimConfig config);

    /// Advances one virtual slot.
    SlotOutcome step();

    /// Applies timeline and reconfiguration events due at or before the
    /// current time.
    void apply_timeline();

    /// Steps until the clock reaches the configured duration. Stretches
    /// where every station is idle are advanced in one jump of idle slots.
    void run_to_end();

    bool finished() const { return clock_ >= end_; }
    Ticks now() const { return clock_; }
    int current_w0() const { return w0_; }
    double current_packet_error() const { return p_e_; }

    std::span<StationState> stations() { return stations_; }
    std::span<const StationState> stations() const { return stations_; }

    SimMetrics metrics() const;

private:
    void start_segment();
    void start_backoff(StationState& s, int stage);
    void refill(StationState& s);
    void materialize_arrivals(StationState& s);
    void record_delivery(Ticks at, Bits bits);
    Ticks window_ticks() const;

    SimConfig config_;
    std::vector<StationState> stations_;
    CounterRng channel_;
    Ticks clock_ = 0;
    Ticks end_ = 0;
    Ticks warmup_ = 0;
    bool measuring_ = false;
    Ticks measure_start_ = 0;

    int w0_ = 0;
    Bits payload_bits_ = 0;
    double p_e_ = 0.0;
    std::vector<SlotSegment> segments_;

    std::size_t next_event_ = 0;
    std::size_t next_reconfig_ = 0;
    std::vector<TimelineEvent> timeline_;
    std::vector<Reconfiguration> reconfigs_;

    double delivered_bits_ = 0.0;
    SlotTally measured_;
    std::int64_t measured_attempts_ = 0;
    std::int64_t measured_collided_ = 0;
    std::vector<double> window_bits_;
    std::vector<std::size_t> senders_;
};

SimMetrics run(const SimConfig& config);

/// Transmission attempts per station per measured slot.
double measure_tau(const SimMetrics& metrics);

/// Summary CSV, one row per run (seed first).
void write_metrics_csv(std::ostream& out, std::span<const SimMetrics> runs);
/// station,generated,delivered,collided,errored,dropped,attempts,in_queue
void write_station_csv(std::ostream& out, const SimMetrics& metrics);
/// t_start_s,t_end_s,S_bps
void write_trace_csv(std::ostream& out, const std::vector<WindowSample>& trace);

}  // namespace dcf

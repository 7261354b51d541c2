#include "dcf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "dcf/errors.hpp"

namespace dcf {

namespace {

constexpr Ticks kNever = std::numeric_limits<Ticks>::max();

void check(bool cond, const std::string& msg) {
    if (!cond) {
        throw ConfigError("sim: " + msg);
    }
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

Ticks to_ticks(double seconds) { return static_cast<Ticks>(std::llround(seconds * kTicksPerSecond)); }

double to_seconds(Ticks ticks) { return static_cast<double>(ticks) / kTicksPerSecond; }

Ticks SlotSegment::elapsed() const {
    return count.idle * sigma + count.success * success + count.collision * collision +
           count.error * error;
}

void SimConfig::validate() const {
    try {
        scenario.validate();
        timing.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("sim: ") + e.what());
    }
    check(duration > 0.0, "duration must be positive");
    check(warmup >= 0.0 && warmup < duration, "warmup must lie in [0, duration)");
    check(queue_capacity >= 1, "queue capacity must be >= 1");
    check(window >= 0.0, "trace window must be non-negative");
    check(duration * kTicksPerSecond < 9e18, "duration too long for the tick clock");
    for (std::size_t i = 0; i < timeline.size(); ++i) {
        check(timeline[i].station >= 0 && timeline[i].station < scenario.n_stations,
              "timeline references unknown station " + std::to_string(timeline[i].station));
        check(timeline[i].time >= 0.0, "timeline times must be non-negative");
        check(i == 0 || timeline[i - 1].time <= timeline[i].time, "timeline must be sorted by time");
    }
    for (std::size_t i = 0; i < reconfigurations.size(); ++i) {
        const auto& r = reconfigurations[i];
        check(r.time >= 0.0, "reconfiguration times must be non-negative");
        check(i == 0 || reconfigurations[i - 1].time <= r.time, "reconfigurations must be sorted by time");
        check(!r.w0 || *r.w0 >= 1, "reconfigured w0 must be >= 1");
        check(!r.payload_bits || *r.payload_bits > 0, "reconfigured payload must be positive");
    }
}

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)), channel_(config_.seed, 0) {
    config_.validate();
    const auto& sc = config_.scenario;
    end_ = to_ticks(config_.duration);
    warmup_ = to_ticks(config_.warmup);
    w0_ = sc.w0;
    payload_bits_ = sc.payload_bits;
    p_e_ = sc.packet_error(config_.timing);
    timeline_ = config_.timeline;
    reconfigs_ = config_.reconfigurations;
    start_segment();

    if (config_.window > 0.0) {
        const auto windows = static_cast<std::size_t>(std::ceil(config_.duration / config_.window - 1e-9));
        window_bits_.assign(std::max<std::size_t>(windows, 1), 0.0);
    }

    stations_.resize(static_cast<std::size_t>(sc.n_stations));
    for (int i = 0; i < sc.n_stations; ++i) {
        auto& s = stations_[static_cast<std::size_t>(i)];
        s.id = i;
        s.rng = CounterRng(config_.seed, static_cast<std::uint64_t>(i) + 1);
        s.next_arrival = kNever;
        if (sc.saturated) {
            refill(s);
            start_backoff(s, 0);
        } else if (sc.lambda > 0.0) {
            s.next_arrival = to_ticks(s.rng.exponential(sc.lambda));
        }
    }
    apply_timeline();
}

void Simulator::start_segment() {
    const auto d = slot_durations(config_.timing, payload_bits_);
    SlotSegment seg;
    seg.sigma = to_ticks(d.sigma);
    seg.success = to_ticks(d.t_success);
    seg.collision = to_ticks(d.t_collision);
    seg.error = to_ticks(d.t_error);
    segments_.push_back(seg);
}

void Simulator::start_backoff(StationState& s, int stage) {
    s.mode = StationMode::Backoff;
    s.stage = stage;
    const auto window = static_cast<std::uint64_t>(w0_) << stage;
    s.counter = static_cast<std::int64_t>(s.rng.below(window));
}

void Simulator::refill(StationState& s) {
    while (s.active && s.queue < config_.queue_capacity) {
        ++s.queue;
        ++s.stats.generated;
    }
}

void Simulator::materialize_arrivals(StationState& s) {
    const double lambda = config_.scenario.lambda;
    while (s.next_arrival <= clock_) {
        ++s.stats.generated;
        if (s.queue < config_.queue_capacity) {
            ++s.queue;
        } else {
            ++s.stats.dropped;
        }
        const double gap = s.rng.exponential(lambda) * kTicksPerSecond;
        s.next_arrival = gap < 1e18 ? s.next_arrival + static_cast<Ticks>(std::llround(gap)) : kNever;
    }
    if (s.queue == 0) {
        return;
    }
    if (s.mode == StationMode::Idle) {
        if (config_.variant == BackoffVariant::PostBackoff) {
            s.mode = StationMode::Backoff;
            s.stage = 0;
            s.counter = 0;
        } else {
            start_backoff(s, 0);
        }
    } else if (s.mode == StationMode::PostBackoff) {
        s.mode = StationMode::Backoff;
        s.stage = 0;
    }
}

void Simulator::apply_timeline() {
    const auto& sc = config_.scenario;
    while (next_reconfig_ < reconfigs_.size() && to_ticks(reconfigs_[next_reconfig_].time) <= clock_) {
        const auto& r = reconfigs_[next_reconfig_++];
        if (r.w0) {
            w0_ = *r.w0;
        }
        if (r.payload_bits && *r.payload_bits != payload_bits_) {
            payload_bits_ = *r.payload_bits;
            auto at_payload = sc;
            at_payload.payload_bits = payload_bits_;
            p_e_ = at_payload.packet_error(config_.timing);
            start_segment();
        }
    }
    while (next_event_ < timeline_.size() && to_ticks(timeline_[next_event_].time) <= clock_) {
        const auto& ev = timeline_[next_event_++];
        auto& s = stations_[static_cast<std::size_t>(ev.station)];
        if (ev.on == s.active) {
            continue;
        }
        s.active = ev.on;
        if (!ev.on) {
            // Queue drains; no new arrivals.
            s.next_arrival = kNever;
            continue;
        }
        if (sc.saturated) {
            refill(s);
            if (s.mode != StationMode::Backoff) {
                start_backoff(s, 0);
            }
        } else if (sc.lambda > 0.0) {
            s.next_arrival = to_ticks(ev.time) + to_ticks(s.rng.exponential(sc.lambda));
        }
    }
}

Ticks Simulator::window_ticks() const { return to_ticks(config_.window); }

void Simulator::record_delivery(Ticks at, Bits bits) {
    if (measuring_) {
        delivered_bits_ += static_cast<double>(bits);
    }
    if (!window_bits_.empty()) {
        const auto idx = static_cast<std::size_t>((at - 1) / window_ticks());
        if (idx < window_bits_.size()) {
            window_bits_[idx] += static_cast<double>(bits);
        }
    }
}

SlotOutcome Simulator::step() {
    if (!measuring_ && clock_ >= warmup_) {
        measuring_ = true;
        measure_start_ = clock_;
    }

    auto& senders = senders_;
    senders.clear();
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        const auto& s = stations_[i];
        if (s.mode == StationMode::Backoff && s.counter == 0) {
            senders.push_back(i);
        }
    }

    SlotOutcome out;
    out.transmitters = static_cast<int>(senders.size());
    auto& seg = segments_.back();
    if (senders.empty()) {
        out.kind = SlotKind::Idle;
        out.duration = seg.sigma;
        ++seg.count.idle;
    } else if (senders.size() > 1) {
        out.kind = SlotKind::Collision;
        out.duration = seg.collision;
        ++seg.count.collision;
    } else if (channel_.bernoulli(p_e_)) {
        out.kind = SlotKind::Error;
        out.duration = seg.error;
        ++seg.count.error;
    } else {
        out.kind = SlotKind::Success;
        out.duration = seg.success;
        ++seg.count.success;
    }
    clock_ += out.duration;

    if (measuring_) {
        switch (out.kind) {
        case SlotKind::Idle:
            ++measured_.idle;
            break;
        case SlotKind::Success:
            ++measured_.success;
            break;
        case SlotKind::Collision:
            ++measured_.collision;
            measured_collided_ += out.transmitters;
            break;
        case SlotKind::Error:
            ++measured_.error;
            break;
        }
        measured_attempts_ += out.transmitters;
    }

    const int top = config_.scenario.m;
    for (std::size_t i = 0, next_sender = 0; i < stations_.size(); ++i) {
        auto& s = stations_[i];
        const bool sending = next_sender < senders.size() && senders[next_sender] == i;
        if (!sending) {
            if (s.mode == StationMode::Backoff) {
                --s.counter;
            } else if (s.mode == StationMode::PostBackoff) {
                if (--s.counter <= 0) {
                    s.mode = StationMode::Idle;
                    s.counter = 0;
                }
            }
            continue;
        }
        ++next_sender;
        ++s.stats.attempts;
        if (out.kind == SlotKind::Collision || out.kind == SlotKind::Error) {
            ++(out.kind == SlotKind::Collision ? s.stats.collided : s.stats.errored);
            start_backoff(s, std::min(s.stage + 1, top));
            continue;
        }
        ++s.stats.delivered;
        --s.queue;
        record_delivery(clock_, payload_bits_);
        if (config_.scenario.saturated) {
            refill(s);
        }
        if (s.queue > 0) {
            start_backoff(s, 0);
        } else if (config_.variant == BackoffVariant::PostBackoff) {
            start_backoff(s, 0);
            s.mode = s.counter > 0 ? StationMode::PostBackoff : StationMode::Idle;
        } else {
            s.mode = StationMode::Idle;
            s.stage = 0;
            s.counter = 0;
        }
    }

    for (auto& s : stations_) {
        materialize_arrivals(s);
    }
    apply_timeline();
    return out;
}

void Simulator::run_to_end() {
    while (!finished()) {
        const bool all_idle = std::all_of(stations_.begin(), stations_.end(),
                                          [](const StationState& s) { return s.mode == StationMode::Idle; });
        if (!all_idle) {
            step();
            continue;
        }
        // Nothing can transmit before the next arrival or event: count the
        // idle slots up to the first boundary at or after it.
        if (!measuring_ && clock_ >= warmup_) {
            measuring_ = true;
            measure_start_ = clock_;
        }
        Ticks target = end_;
        if (!measuring_) target = std::min(target, warmup_);
        for (const auto& s : stations_) target = std::min(target, s.next_arrival);
        if (next_event_ < timeline_.size()) target = std::min(target, to_ticks(timeline_[next_event_].time));
        if (next_reconfig_ < reconfigs_.size())
            target = std::min(target, to_ticks(reconfigs_[next_reconfig_].time));

        auto& seg = segments_.back();
        const Ticks slots = std::max<Ticks>(1, (target - clock_ + seg.sigma - 1) / seg.sigma);
        clock_ += slots * seg.sigma;
        seg.count.idle += slots;
        if (measuring_) {
            measured_.idle += slots;
        }
        for (auto& s : stations_) {
            materialize_arrivals(s);
        }
        apply_timeline();
    }
}

SimMetrics Simulator::metrics() const {
    SimMetrics m;
    m.seed = config_.seed;
    m.n_stations = config_.scenario.n_stations;
    m.sim_time_s = to_seconds(clock_);
    m.measure_start_s = to_seconds(measuring_ ? measure_start_ : clock_);
    m.delivered_payload_bits = delivered_bits_;
    const double span = m.sim_time_s - m.measure_start_s;
    m.aggregate_throughput_bps = span > 0.0 ? delivered_bits_ / span : 0.0;
    for (const auto& seg : segments_) {
        m.slots.idle += seg.count.idle;
        m.slots.success += seg.count.success;
        m.slots.collision += seg.count.collision;
        m.slots.error += seg.count.error;
    }
    m.measured_slots = measured_;
    m.measured_attempts = measured_attempts_;
    m.measured_collided_attempts = measured_collided_;
    m.measured_tau = measure_tau(m);
    m.measured_p_col = measured_attempts_ > 0
                           ? static_cast<double>(measured_collided_) / static_cast<double>(measured_attempts_)
                           : 0.0;
    for (const auto& s : stations_) {
        auto st = s.stats;
        st.in_queue = s.queue;
        m.stations.push_back(st);
    }
    m.segments = segments_;
    const double w = config_.window;
    for (std::size_t k = 0; k < window_bits_.size(); ++k) {
        WindowSample ws;
        ws.t_start = static_cast<double>(k) * w;
        ws.t_end = std::min(static_cast<double>(k + 1) * w, config_.duration);
        ws.throughput_bps = window_bits_[k] / (ws.t_end - ws.t_start);
        m.trace.push_back(ws);
    }
    return m;
}

SimMetrics run(const SimConfig& config) {
    Simulator sim(config);
    sim.run_to_end();
    return sim.metrics();
}

double measure_tau(const SimMetrics& metrics) {
    const auto slots = metrics.measured_slots.total();
    if (slots == 0 || metrics.n_stations == 0) {
        return 0.0;
    }
    return static_cast<double>(metrics.measured_attempts) /
           (static_cast<double>(slots) * metrics.n_stations);
}

void write_metrics_csv(std::ostream& out, std::span<const SimMetrics> runs) {
    out << "seed,sim_time_s,measure_start_s,delivered_payload_bits,S_bps,slots_idle,slots_success,"
           "slots_collision,slots_error,measured_tau,measured_p_col\n";
    for (const auto& m : runs) {
        out << m.seed << ',' << num(m.sim_time_s) << ',' << num(m.measure_start_s) << ','
            << num(m.delivered_payload_bits) << ',' << num(m.aggregate_throughput_bps) << ','
            << m.slots.idle << ',' << m.slots.success << ',' << m.slots.collision << ','
            << m.slots.error << ',' << num(m.measured_tau) << ',' << num(m.measured_p_col) << '\n';
    }
}

void write_station_csv(std::ostream& out, const SimMetrics& m) {
    out << "station,generated,delivered,collided,errored,dropped,attempts,in_queue\n";
    for (std::size_t i = 0; i < m.stations.size(); ++i) {
        const auto& s = m.stations[i];
        out << i << ',' << s.generated << ',' << s.delivered << ',' << s.collided << ',' << s.errored
            << ',' << s.dropped << ',' << s.attempts << ',' << s.in_queue << '\n';
    }
}

void write_trace_csv(std::ostream& out, const std::vector<WindowSample>& trace) {
    out << "t_start_s,t_end_s,S_bps\n";
    for (const auto& w : trace) {
        out << num(w.t_start) << ',' << num(w.t_end) << ',' << num(w.throughput_bps) << '\n';
    }
}

}  // namespace dcf

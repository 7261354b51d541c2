#include "dcf/protocol.hpp"

#include <cmath>
#include <sstream>

#include "dcf/errors.hpp"

namespace dcf {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw InvalidParameter(msg);
    }
}

/// Seconds to microseconds at picosecond resolution.
double to_us(double seconds) { return std::round(seconds * 1e12) / 1e6; }

double tail_duration(const ProtocolTiming& t, BusyTail tail) {
    switch (tail) {
    case BusyTail::Difs:
        return t.difs;
    case BusyTail::Eifs:
        return t.eifs;
    case BusyTail::AckTimeout:
        return t.ack_timeout;
    }
    return t.difs;
}

}  // namespace

std::string_view to_string(BusyTail tail) {
    switch (tail) {
    case BusyTail::Difs:
        return "difs";
    case BusyTail::Eifs:
        return "eifs";
    case BusyTail::AckTimeout:
        return "ack_timeout";
    }
    return "difs";
}

BusyTail busy_tail_from_string(std::string_view name) {
    if (name == "difs") return BusyTail::Difs;
    if (name == "eifs") return BusyTail::Eifs;
    if (name == "ack_timeout") return BusyTail::AckTimeout;
    throw ConfigError("unknown busy tail '" + std::string(name) +
                      "' (expected difs, eifs or ack_timeout)");
}

void ProtocolTiming::validate() const {
    require(sigma > 0 && sifs > 0 && difs > 0 && eifs > 0 && ack_timeout > 0 &&
                cts_timeout > 0 && prop_delay > 0,
            "timing durations must be strictly positive");
    require(sigma <= difs, "sigma must not exceed DIFS");
    require(sifs < difs, "SIFS must be shorter than DIFS");
    require(data_rate > 0 && control_rate > 0, "bit rates must be strictly positive");
    require(mac_header_bits > 0 && phy_header_bits > 0 && ack_bits > 0,
            "header and ACK sizes must be strictly positive");
    require(per_overhead_bits >= mac_header_bits,
            "per_overhead_bits must include the MAC header");
}

std::vector<std::string> timing_profile_names() {
    return {"dot11b-table1", "basic-difs", "ack-timeout"};
}

ProtocolTiming timing_profile(std::string_view name) {
    ProtocolTiming t;
    if (name == "dot11b-table1") {
        return t;
    }
    if (name == "basic-difs") {
        t.collision_tail = BusyTail::Difs;
        t.error_tail = BusyTail::Difs;
        t.ack_has_phy_header = false;
        return t;
    }
    if (name == "ack-timeout") {
        t.collision_tail = BusyTail::AckTimeout;
        t.error_tail = BusyTail::AckTimeout;
        return t;
    }
    throw ConfigError("unknown timing profile '" + std::string(name) + "'");
}

ProtocolTiming timing_from_json(const nlohmann::json& j, ProtocolTiming base) {
    if (!j.is_object()) {
        throw ConfigError("timing section must be an object");
    }
    ProtocolTiming t = base;
    try {
        if (j.contains("profile")) {
            t = timing_profile(j.at("profile").get<std::string>());
        }
        auto us = [&](const char* key, double& field) {
            if (j.contains(key)) field = j.at(key).get<double>() / 1e6;
        };
        auto bits = [&](const char* key, Bits& field) {
            if (j.contains(key)) field = j.at(key).get<Bits>();
        };
        us("sigma_us", t.sigma);
        us("sifs_us", t.sifs);
        us("difs_us", t.difs);
        us("eifs_us", t.eifs);
        us("ack_timeout_us", t.ack_timeout);
        us("cts_timeout_us", t.cts_timeout);
        us("prop_delay_us", t.prop_delay);
        bits("mac_header_bits", t.mac_header_bits);
        bits("phy_header_bits", t.phy_header_bits);
        bits("ack_bits", t.ack_bits);
        bits("per_overhead_bits", t.per_overhead_bits);
        if (j.contains("data_rate_bps")) t.data_rate = j.at("data_rate_bps").get<double>();
        if (j.contains("control_rate_bps")) t.control_rate = j.at("control_rate_bps").get<double>();
        if (j.contains("collision_tail"))
            t.collision_tail = busy_tail_from_string(j.at("collision_tail").get<std::string>());
        if (j.contains("error_tail"))
            t.error_tail = busy_tail_from_string(j.at("error_tail").get<std::string>());
        if (j.contains("ack_has_phy_header"))
            t.ack_has_phy_header = j.at("ack_has_phy_header").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("timing: ") + e.what());
    }
    try {
        t.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("timing: ") + e.what());
    }
    return t;
}

nlohmann::json timing_to_json(const ProtocolTiming& t) {
    return {
        {"sigma_us", to_us(t.sigma)},
        {"sifs_us", to_us(t.sifs)},
        {"difs_us", to_us(t.difs)},
        {"eifs_us", to_us(t.eifs)},
        {"ack_timeout_us", to_us(t.ack_timeout)},
        {"cts_timeout_us", to_us(t.cts_timeout)},
        {"prop_delay_us", to_us(t.prop_delay)},
        {"mac_header_bits", t.mac_header_bits},
        {"phy_header_bits", t.phy_header_bits},
        {"ack_bits", t.ack_bits},
        {"per_overhead_bits", t.per_overhead_bits},
        {"data_rate_bps", t.data_rate},
        {"control_rate_bps", t.control_rate},
        {"collision_tail", std::string(to_string(t.collision_tail))},
        {"error_tail", std::string(to_string(t.error_tail))},
        {"ack_has_phy_header", t.ack_has_phy_header},
    };
}

SlotDurations slot_durations(const ProtocolTiming& timing, Bits payload_bits) {
    timing.validate();
    require(payload_bits >= 0, "payload must be non-negative");

    const double header = static_cast<double>(timing.phy_header_bits) / timing.control_rate +
                          static_cast<double>(timing.mac_header_bits + payload_bits) / timing.data_rate;
    const double ack_bits = static_cast<double>(
        timing.ack_bits + (timing.ack_has_phy_header ? timing.phy_header_bits : 0));
    const double ack = ack_bits / timing.control_rate;

    SlotDurations d;
    d.sigma = timing.sigma;
    d.t_success = header + timing.sifs + timing.prop_delay + ack + timing.difs + timing.prop_delay;
    d.t_collision = header + tail_duration(timing, timing.collision_tail) + timing.prop_delay;
    d.t_error = header + tail_duration(timing, timing.error_tail) + timing.prop_delay;
    return d;
}

double plcp_error_rate(double bit_error_prob, const ProtocolTiming& timing) {
    require(bit_error_prob >= 0.0 && bit_error_prob < 1.0, "P_b must lie in [0,1)");
    const auto plcp_bits = static_cast<double>(timing.per_overhead_bits - timing.mac_header_bits);
    return -std::expm1(plcp_bits * std::log1p(-bit_error_prob));
}

double packet_error_rate(double bit_error_prob, Bits payload_bits, const ProtocolTiming& timing) {
    require(bit_error_prob >= 0.0 && bit_error_prob < 1.0, "P_b must lie in [0,1)");
    require(payload_bits >= 0, "payload must be non-negative");
    // 1 - [1 - Pe(PLCP)][1 - Pe(DATA)], collapsed into a single exponent.
    const auto exponent = static_cast<double>(timing.per_overhead_bits + payload_bits);
    return -std::expm1(exponent * std::log1p(-bit_error_prob));
}

double bit_error_from_packet_error(double packet_error_prob, Bits payload_bits,
                                   const ProtocolTiming& timing) {
    require(packet_error_prob >= 0.0 && packet_error_prob < 1.0, "P_e must lie in [0,1)");
    const auto exponent = static_cast<double>(timing.per_overhead_bits + payload_bits);
    return -std::expm1(std::log1p(-packet_error_prob) / exponent);
}

Bits max_payload_for_per_target(double bit_error_prob, double per_target,
                                const ProtocolTiming& timing) {
    require(bit_error_prob >= 0.0 && bit_error_prob < 1.0, "P_b must lie in [0,1)");
    require(per_target > 0.0 && per_target < 1.0, "PER target must lie in (0,1)");
    if (bit_error_prob == 0.0) {
        return kUnboundedPayload;
    }
    const double plcp_ok = 1.0 - plcp_error_rate(bit_error_prob, timing);
    const double bound = std::log((1.0 - per_target) / plcp_ok) / std::log1p(-bit_error_prob) -
                         static_cast<double>(timing.mac_header_bits);
    if (!(bound > 0.0)) {
        std::ostringstream os;
        os << "PER target " << per_target << " unreachable at P_b=" << bit_error_prob
           << ": header overhead alone gives PER "
           << packet_error_rate(bit_error_prob, 0, timing);
        throw InfeasibleTarget(os.str());
    }
    if (bound > 1e15) {
        return kUnboundedPayload;
    }
    const auto bytes = static_cast<Bits>(std::ceil(bound / static_cast<double>(kBitsPerByte)));
    return bytes * kBitsPerByte;
}

void ScenarioParams::validate() const {
    require(n_stations >= 1, "n_stations must be >= 1");
    require(lambda >= 0.0 && !std::isnan(lambda), "lambda must be >= 0");
    require(w0 >= 1, "w0 must be >= 1");
    require(m >= 0 && m <= 30, "m must lie in [0,30]");
    require(payload_bits > 0, "payload must be positive");
    require(!(bit_error_prob && packet_error_prob),
            "give either bit_error_prob or packet_error_prob, not both");
    if (bit_error_prob) {
        require(*bit_error_prob >= 0.0 && *bit_error_prob < 1.0, "P_b must lie in [0,1)");
    }
    if (packet_error_prob) {
        require(*packet_error_prob >= 0.0 && *packet_error_prob <= 1.0, "P_e must lie in [0,1]");
    }
    require(per_target > 0.0 && per_target < 1.0, "PER target must lie in (0,1)");
    require(pl_max_bits > 0, "pl_max must be positive");
}

double ScenarioParams::packet_error(const ProtocolTiming& timing) const {
    if (bit_error_prob) {
        return packet_error_rate(*bit_error_prob, payload_bits, timing);
    }
    return packet_error_prob.value_or(0.0);
}

double ScenarioParams::bit_error(const ProtocolTiming& timing) const {
    if (bit_error_prob) {
        return *bit_error_prob;
    }
    return bit_error_from_packet_error(packet_error_prob.value_or(0.0), payload_bits, timing);
}

ScenarioParams scenario_from_json(const nlohmann::json& j, ScenarioParams base) {
    if (!j.is_object()) {
        throw ConfigError("scenario section must be an object");
    }
    ScenarioParams s = base;
    try {
        if (j.contains("n_stations")) s.n_stations = j.at("n_stations").get<int>();
        if (j.contains("lambda_pps")) s.lambda = j.at("lambda_pps").get<double>();
        if (j.contains("saturated")) s.saturated = j.at("saturated").get<bool>();
        if (j.contains("w0")) s.w0 = j.at("w0").get<int>();
        if (j.contains("m")) s.m = j.at("m").get<int>();
        if (j.contains("payload_bytes"))
            s.payload_bits = j.at("payload_bytes").get<Bits>() * kBitsPerByte;
        if (j.contains("bit_error_prob")) {
            s.bit_error_prob = j.at("bit_error_prob").get<double>();
            s.packet_error_prob.reset();
        }
        if (j.contains("packet_error_prob")) {
            s.packet_error_prob = j.at("packet_error_prob").get<double>();
            if (!j.contains("bit_error_prob")) s.bit_error_prob.reset();
        }
        if (j.contains("per_target")) s.per_target = j.at("per_target").get<double>();
        if (j.contains("pl_max_bytes"))
            s.pl_max_bits = j.at("pl_max_bytes").get<Bits>() * kBitsPerByte;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    try {
        s.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return s;
}

nlohmann::json scenario_to_json(const ScenarioParams& s) {
    nlohmann::json j = {
        {"n_stations", s.n_stations},
        {"lambda_pps", s.lambda},
        {"saturated", s.saturated},
        {"w0", s.w0},
        {"m", s.m},
        {"payload_bytes", s.payload_bits / kBitsPerByte},
        {"per_target", s.per_target},
        {"pl_max_bytes", s.pl_max_bits / kBitsPerByte},
    };
    if (s.bit_error_prob) j["bit_error_prob"] = *s.bit_error_prob;
    if (s.packet_error_prob) j["packet_error_prob"] = *s.packet_error_prob;
    return j;
}

}  // namespace dcf

#pragma once

// MAC/PHY timing constants, busy-slot durations and the bit-level
// packet error model for 802.11 basic access (DATA + ACK).

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dcf {

using Bits = std::int64_t;

constexpr Bits kBitsPerByte = 8;

/// Returned by max_payload_for_per_target on an error-free channel.
constexpr Bits kUnboundedPayload = std::numeric_limits<Bits>::max();

/// What follows the frame on the channel when it is not acknowledged.
enum class BusyTail { Difs, Eifs, AckTimeout };

std::string_view to_string(BusyTail tail);
BusyTail busy_tail_from_string(std::string_view name);

struct ProtocolTiming {
    double sigma = 20e-6;
    double sifs = 10e-6;
    double difs = 50e-6;
    double eifs = 300e-6;
    double ack_timeout = 300e-6;
    double cts_timeout = 300e-6;
    double prop_delay = 1e-6;

    Bits mac_header_bits = 24 * kBitsPerByte;
    Bits phy_header_bits = 16 * kBitsPerByte;
    Bits ack_bits = 14 * kBitsPerByte;

    double data_rate = 1e6;
    double control_rate = 1e6;

    // Non-payload bits in the PER exponent. Larger than MAC+PHY header
    // (320 bits); 416 reproduces the reference PER figures.
    Bits per_overhead_bits = 416;

    BusyTail collision_tail = BusyTail::Eifs;
    BusyTail error_tail = BusyTail::Eifs;
    bool ack_has_phy_header = true;

    /// Throws InvalidParameter on non-positive durations/rates or
    /// sigma > difs, sifs >= difs.
    void validate() const;

    bool operator==(const ProtocolTiming&) const = default;
};

/// Names accepted by timing_profile(): "dot11b-table1" (default),
/// "basic-difs", "ack-timeout".
std::vector<std::string> timing_profile_names();
ProtocolTiming timing_profile(std::string_view name);

/// Overlays the keys present in `j` onto `base`. Durations are in
/// microseconds (`*_us`), sizes in bits, rates in bit/s. A "profile" key
/// selects the base profile first.
ProtocolTiming timing_from_json(const nlohmann::json& j, ProtocolTiming base = {});
nlohmann::json timing_to_json(const ProtocolTiming& timing);

struct SlotDurations {
    double t_success = 0.0;
    double t_collision = 0.0;
    double t_error = 0.0;
    double sigma = 0.0;
};

/// Basic-access busy periods for a frame carrying `payload_bits`:
///   T_s = H + SIFS + tau_p + ACK + DIFS + tau_p
///   T_c = H + tail_c + tau_p,  T_e = H + tail_e + tau_p
/// with H = PHYh/control_rate + (MACh + payload)/data_rate.
SlotDurations slot_durations(const ProtocolTiming& timing, Bits payload_bits);

/// PER of the PLCP part of the exponent (per_overhead_bits - MACh bits).
double plcp_error_rate(double bit_error_prob, const ProtocolTiming& timing);

/// P_e = 1 - (1 - P_b)^(per_overhead_bits + payload_bits).
double packet_error_rate(double bit_error_prob, Bits payload_bits, const ProtocolTiming& timing);

/// Inverse of packet_error_rate on the bit error probability.
double bit_error_from_packet_error(double packet_error_prob, Bits payload_bits,
                                   const ProtocolTiming& timing);

/// Largest payload meeting `per_target`, ceiled to whole bytes and
/// returned in bits. kUnboundedPayload when P_b == 0.
/// Throws InfeasibleTarget when even an empty payload exceeds the target.
Bits max_payload_for_per_target(double bit_error_prob, double per_target,
                                const ProtocolTiming& timing);

/// One network operating point.
struct ScenarioParams {
    int n_stations = 10;
    double lambda = 1000.0;  // packets/s per station
    bool saturated = false;  // q pinned to 1
    int w0 = 32;
    int m = 5;
    Bits payload_bits = 1028 * kBitsPerByte;
    // At most one of these is set; neither means an error-free channel.
    std::optional<double> bit_error_prob;
    std::optional<double> packet_error_prob;
    double per_target = 8e-2;
    Bits pl_max_bits = 2312 * kBitsPerByte;

    void validate() const;

    /// P_e at the scenario payload; derived from P_b when that is the
    /// source of truth.
    double packet_error(const ProtocolTiming& timing) const;

    /// P_b; derived from P_e at the current payload when only P_e is set.
    double bit_error(const ProtocolTiming& timing) const;
};

ScenarioParams scenario_from_json(const nlohmann::json& j, ScenarioParams base = {});
nlohmann::json scenario_to_json(const ScenarioParams& scenario);

}  // namespace dcf

#include <cmath>
#include <sstream>

#include "doctest.h"

#include "dcf/errors.hpp"
#include "dcf/optimizer.hpp"
#include "oracles.hpp"

using namespace dcf;

namespace {

SlotDurations slots_for(Bits bytes) { return slot_durations(ProtocolTiming{}, bytes * 8); }

double saturated_throughput(int n, int w0, int m, double pe, Bits bytes) {
    ScenarioParams s;
    s.n_stations = n;
    s.saturated = true;
    s.w0 = w0;
    s.m = m;
    s.payload_bits = bytes * 8;
    s.packet_error_prob = pe;
    return operating_point(s, ProtocolTiming{}).throughput;
}

ScenarioParams scenario_a() {
    ScenarioParams s;
    s.n_stations = 10;
    s.lambda = 5.0;
    s.payload_bits = 1024 * 8;
    s.bit_error_prob = 1e-5;
    s.per_target = 8e-2;
    return s;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("W_OP: reference windows for 10 and 5 stations") {
    const auto d = slots_for(1028);
    CHECK(std::abs(optimal_contention_window(10, 0.0, 5, d) - 275) <= 5);
    CHECK(std::abs(optimal_contention_window(5, 0.0, 5, d) - 130) <= 5);
}

TEST_CASE("W_OP: cancelled form equals the printed ratio") {
    for (int n : {2, 5, 10, 30}) {
        for (int m : {0, 1, 3, 5}) {
            for (double pe : {0.0, 0.05, 0.3}) {
                for (Bits b : {100, 1028, 2312}) {
                    const auto d = slots_for(b);
                    const double tm = oracle::tau_m_literal(n, d.sigma, d.t_collision);
                    const double printed = oracle::w_op_literal(n, pe, m, tm);
                    CAPTURE(n);
                    CAPTURE(m);
                    CAPTURE(pe);
                    CHECK(optimal_contention_window_real(n, pe, m, d) == doctest::Approx(printed).epsilon(1e-8));
                }
            }
        }
    }
}

TEST_CASE("W_OP: no backoff stages gives 2/tau_m - 1") {
    const auto d = slots_for(1028);
    for (int n : {2, 10, 50}) {
        const double tm = tau_star(n, d.sigma, d.t_collision);
        CHECK(optimal_contention_window_real(n, 0.2, 0, d) == doctest::Approx(2.0 / tm - 1.0).epsilon(1e-13));
    }
}

TEST_CASE("W_OP: grows linearly in N without backoff stages") {
    const auto d = slots_for(1028);
    for (int n : {10, 20, 40}) {
        const double r = optimal_contention_window_real(2 * n, 0.0, 0, d) / optimal_contention_window_real(n, 0.0, 0, d);
        CHECK(r >= 1.8);
        CHECK(r <= 2.2);
    }
}

TEST_CASE("W_OP: saturated throughput at W_OP reaches S_m") {
    for (int n : {5, 10, 20}) {
        for (double pe : {0.0, 0.1}) {
            const auto d = slots_for(1028);
            const int w = optimal_contention_window(n, pe, 5, d);
            CHECK(saturated_throughput(n, w, 5, pe, 1028) == doctest::Approx(link_capacity(n, pe, 8224, d)).epsilon(0.005));
        }
    }
}

TEST_CASE("W_OP: local maximum of the saturated throughput") {
    for (int n : {5, 10, 20}) {
        for (int m : {0, 3, 5}) {
            for (double pe : {0.0, 0.1}) {
                const int w = optimal_contention_window(n, pe, m, slots_for(1028));
                const double at = saturated_throughput(n, w, m, pe, 1028);
                CAPTURE(n);
                CAPTURE(m);
                CHECK(at >= saturated_throughput(n, static_cast<int>(std::lround(0.8 * w)), m, pe, 1028));
                CHECK(at >= saturated_throughput(n, static_cast<int>(std::lround(1.25 * w)), m, pe, 1028));
                CHECK(at >= saturated_throughput(n, 32, m, pe, 1028));
            }
        }
    }
}

TEST_CASE("W_OP: infeasible and invalid inputs") {
    const auto d = slots_for(1028);
    CHECK_THROWS_AS(optimal_contention_window(2, 0.99, 10, d), InfeasibleWindow);
    CHECK_THROWS_AS(optimal_contention_window(1, 0.0, 5, d), InvalidParameter);
    CHECK_THROWS_AS(optimal_contention_window(10, 1.0, 5, d), InfeasibleWindow);
}

TEST_CASE("step 1: reference payload for scenario A") {
    const auto r = payload_for_critical_load(5.0, 10, 1e-5, ProtocolTiming{}, 2312 * 8);
    CHECK_FALSE(r.region_shift);
    CHECK(static_cast<double>(r.payload_bits / 8) == doctest::Approx(1938).epsilon(0.02));
}

TEST_CASE("step 1: exhaustive byte scan") {
    const ProtocolTiming t;
    for (double lambda : {8.0, 5.0, 3.0}) {
        Bits scan = 0;
        for (Bits b = 1; b <= 2312; ++b) {
            const double lc = critical_load(10, packet_error_rate(1e-5, b * 8, t), b * 8, slot_durations(t, b * 8));
            if (lc >= lambda) scan = b;
        }
        CAPTURE(lambda);
        CHECK(payload_for_critical_load(lambda, 10, 1e-5, t, 2312 * 8).payload_bits == scan * 8);
    }
}

TEST_CASE("step 1: light load clamps to PL_max, heavy load flags a region shift") {
    const ProtocolTiming t;
    CHECK(payload_for_critical_load(1e-3, 10, 1e-5, t, 2312 * 8).payload_bits == 2312 * 8);
    const auto heavy = payload_for_critical_load(1e4, 10, 1e-5, t, 2312 * 8);
    CHECK(heavy.region_shift);
    CHECK(heavy.payload_bits == 8);
    Bits prev = 2312 * 8;
    for (double lambda = 1.0; lambda < 40.0; lambda *= 1.3) {
        const auto p = payload_for_critical_load(lambda, 10, 1e-5, t, 2312 * 8).payload_bits;
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("optimize: scenario A walk-through") {
    const ProtocolTiming t;
    const auto o = optimize(scenario_a(), t);
    CHECK(o.region == Region::BLC);
    CHECK_FALSE(o.w_op);
    REQUIRE(o.payload_opt_bits);
    CHECK(*o.payload_step2_bits == 991 * 8);
    CHECK(*o.payload_opt_bits == 991 * 8);
    CHECK(o.achieved_pe == doctest::Approx(8e-2).epsilon(0.01));
    CHECK(*o.payload_opt_bits == std::min({*o.payload_step1_bits, *o.payload_step2_bits, o.pl_max_bits}));
    // The chosen payload keeps the network below the knee.
    CHECK(critical_load(10, o.achieved_pe, *o.payload_opt_bits, slot_durations(t, *o.payload_opt_bits)) >= 5.0);
    const auto tuned = apply_outcome(scenario_a(), o, t);
    CHECK(tuned.payload_bits == 991 * 8);
    CHECK(tuned.w0 == 32);
}

TEST_CASE("optimize: congested network gets W_OP and keeps its payload") {
    ScenarioParams s;
    s.lambda = 1000.0;
    s.packet_error_prob = 0.0;
    const auto o = optimize(s, ProtocolTiming{});
    CHECK(o.region == Region::LC);
    REQUIRE(o.w_op);
    CHECK(std::abs(*o.w_op - 275) <= 5);
    CHECK_FALSE(o.payload_opt_bits);
    const auto tuned = apply_outcome(s, o, ProtocolTiming{});
    CHECK(tuned.payload_bits == s.payload_bits);
    CHECK(tuned.w0 == *o.w_op);
}

TEST_CASE("optimize: lambda exactly at lambda_c takes the payload branch") {
    ScenarioParams s = scenario_a();
    const ProtocolTiming t;
    s.lambda = critical_load(10, s.packet_error(t), s.payload_bits, slot_durations(t, s.payload_bits));
    CHECK(optimize(s, t).region == Region::BLC);
}

TEST_CASE("optimize: PER compliance whenever step 2 binds") {
    const ProtocolTiming t;
    for (double pb : {2e-5, 5e-5, 1e-4}) {
        for (double lambda : {0.5, 2.0, 4.0}) {
            ScenarioParams s = scenario_a();
            s.bit_error_prob = pb;
            s.lambda = lambda;
            const auto o = optimize(s, t);
            if (o.region != Region::BLC) continue;
            if (*o.payload_step2_bits < *o.payload_step1_bits) {
                const double slack = packet_error_rate(pb, 8, t) - packet_error_rate(pb, 0, t);
                CHECK(o.achieved_pe <= s.per_target + slack);
            }
            CHECK(critical_load(10, o.achieved_pe, *o.payload_opt_bits, slot_durations(t, *o.payload_opt_bits)) >= lambda);
        }
    }
}

TEST_CASE("optimize: clean channel leaves step 2 unbounded") {
    ScenarioParams s = scenario_a();
    s.bit_error_prob = 0.0;
    s.lambda = 1.0;
    const auto o = optimize(s, ProtocolTiming{});
    CHECK(*o.payload_step2_bits == kUnboundedPayload);
    CHECK(*o.payload_opt_bits == 2312 * 8);
    std::ostringstream os;
    write_outcome_csv(os, o);
    CHECK(os.str().rfind("region,w_op,payload_step1_B,payload_step2_B,payload_opt_B,achieved_pe,predicted_S_bps\n", 0) == 0);
    CHECK(os.str().find(",inf,") != std::string::npos);
}

TEST_CASE("optimize: infeasible PER target propagates") {
    ScenarioParams s = scenario_a();
    s.bit_error_prob = 1e-3;
    s.lambda = 1e-5;
    s.per_target = 0.1;
    CHECK_THROWS_AS(optimize(s, ProtocolTiming{}), InfeasibleTarget);
}

}  // TEST_SUITE

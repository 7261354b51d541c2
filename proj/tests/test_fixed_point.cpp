#include <cmath>
#include <random>

#include "doctest.h"

#include "dcf/errors.hpp"
#include "dcf/fixed_point.hpp"
#include "dcf/throughput.hpp"
#include "oracles.hpp"

using namespace dcf;

TEST_SUITE("fixed_point") {

TEST_CASE("tau closed form: limits") {
    for (int w0 : {1, 8, 32, 1023}) {
        CHECK(tau_closed_form(0.0, 1.0, w0, 5) == doctest::Approx(2.0 / (w0 + 1)).epsilon(1e-15));
    }
    CHECK(tau_closed_form(0.0, 1.0, 32, 5) == doctest::Approx(0.0606060606).epsilon(1e-9));
    CHECK(tau_closed_form(0.4, 0.0, 32, 5) == 0.0);
    CHECK(tau_closed_form(1.0, 1.0, 1, 1) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(tau_closed_form(1.5, 0.5, 32, 5), InvalidParameter);
    CHECK_THROWS_AS(tau_closed_form(0.1, 1.5, 32, 5), InvalidParameter);
    CHECK_THROWS_AS(tau_closed_form(0.1, 0.5, 0, 5), InvalidParameter);
}

TEST_CASE("tau closed form equals the ratio form away from P_eq = 1/2") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double p = 0.99 * u(rng);
        if (std::abs(p - 0.5) < 1e-3) continue;
        const double q = u(rng);
        const int w0 = 1 + static_cast<int>(u(rng) * 1024);
        const int m = static_cast<int>(u(rng) * 8);
        CHECK(tau_closed_form(p, q, w0, m) == doctest::Approx(oracle::tau_ratio_form(p, q, w0, m)).epsilon(1e-10));
    }
}

TEST_CASE("tau closed form is continuous through P_eq = 1/2") {
    for (int m : {0, 1, 5}) {
        const double at = tau_closed_form(0.5, 0.8, 16, m);
        CHECK(std::isfinite(at));
        CHECK(at == doctest::Approx(oracle::tau_ratio_form(0.5 - 1e-7, 0.8, 16, m)).epsilon(1e-5));
        CHECK(at == doctest::Approx(oracle::tau_ratio_form(0.5 + 1e-7, 0.8, 16, m)).epsilon(1e-5));
    }
}

TEST_CASE("saturated tau is the q = 1 case") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double p = 0.999 * u(rng);
        const int w0 = 1 + static_cast<int>(u(rng) * 512);
        const int m = static_cast<int>(u(rng) * 7);
        CHECK(tau_saturated(p, w0, m) == tau_closed_form(p, 1.0, w0, m));
    }
    CHECK(tau_saturated(0.0, 32, 5) == doctest::Approx(2.0 / 33));
    CHECK(tau_saturated(0.2, 32, 5) == doctest::Approx(stationary_distribution_oracle(0.2, 1.0, 32, 5)).epsilon(1e-10));
}

TEST_CASE("chain oracle: 7-state chain by hand") {
    // W0 = 2, m = 1, P = 1/2, q = 1: b00 = b10 = 1/4 from the balance equations.
    CHECK(stationary_distribution_oracle(0.5, 1.0, 2, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(chain_state_count(2, 1) == 7);
    CHECK(stationary_distribution_oracle(0.0, 1.0, 8, 2) == doctest::Approx(2.0 / 9).epsilon(1e-12));
    CHECK_THROWS_AS(stationary_distribution_oracle(0.1, 0.5, 1024, 5, 4096), InvalidParameter);
}

TEST_CASE("chain oracle agrees with the closed form at a large chain") {
    const double chain = stationary_distribution_oracle(0.3, 0.7, 32, 5);
    CHECK(std::abs(chain - tau_closed_form(0.3, 0.7, 32, 5)) <= 1e-10);
}

TEST_CASE("chain oracle agrees with lazy power iteration") {
    const double cases[][4] = {{0.3, 0.7, 4, 2}, {0.5, 0.2, 2, 1}, {0.8, 0.05, 8, 2}, {0.0, 0.5, 3, 0}};
    for (const auto& c : cases) {
        const int w0 = static_cast<int>(c[2]);
        const int m = static_cast<int>(c[3]);
        CHECK(std::abs(stationary_distribution_oracle(c[0], c[1], w0, m) - oracle::chain_tau_power(c[0], c[1], w0, m)) <= 1e-9);
    }
}

TEST_CASE("chain oracle grid equivalence") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int w0 : {2, 4, 8}) {
        for (int m : {0, 1, 2}) {
            for (int i = 0; i < 10; ++i) {
                const double p = 0.99 * u(rng);
                const double q = u(rng);
                CHECK(std::abs(stationary_distribution_oracle(p, q, w0, m) - tau_closed_form(p, q, w0, m)) <= 1e-9);
            }
        }
    }
}

TEST_CASE("component relations") {
    CHECK(collision_prob(0.0, 10) == 0.0);
    CHECK(collision_prob(0.7, 1) == 0.0);
    CHECK(collision_prob(0.5, 2) == doctest::Approx(0.5));
    CHECK(equivalent_failure_prob(0.0, 0.0) == 0.0);
    CHECK(equivalent_failure_prob(1.0, 0.3) == doctest::Approx(1.0));
    CHECK(equivalent_failure_prob(0.1, 0.2) == doctest::Approx(0.28));
    CHECK(equivalent_failure_prob(0.2, 0.1) == equivalent_failure_prob(0.1, 0.2));
    CHECK(success_slot_prob(0.1, 10) == doctest::Approx(10 * 0.1 * std::pow(0.9, 9)));

    const auto d = slot_durations(ProtocolTiming{}, 8224);
    CHECK(expected_slot_time(0.0, 10, 0.1, d) == doctest::Approx(d.sigma));
    CHECK(expected_slot_time(1.0, 10, 0.0, d) == doctest::Approx(d.t_collision));
    CHECK(expected_slot_time(1.0, 1, 0.0, d) == doctest::Approx(d.t_success));
    const oracle::Slots os{d.t_success, d.t_collision, d.t_error, d.sigma};
    CHECK(expected_slot_time(0.03, 10, 0.2, d) == doctest::Approx(oracle::expected_slot(0.03, 10, 0.2, os)).epsilon(1e-12));

    CHECK(queue_nonempty_prob(0.0, 1e-3) == 0.0);
    CHECK(queue_nonempty_prob(INFINITY, 1e-3) == 1.0);
    CHECK(queue_nonempty_prob(1e9, 1e-3) == doctest::Approx(1.0));
    CHECK(queue_nonempty_prob(std::log(2.0), 1.0) == doctest::Approx(0.5));
    CHECK(queue_nonempty_prob_linear(2.0, 1e-3) == doctest::Approx(2e-3));
}

TEST_CASE("solve: idle network") {
    ScenarioParams s;
    s.lambda = 0.0;
    s.packet_error_prob = 0.1;
    const auto sol = solve_equilibrium(s, ProtocolTiming{});
    CHECK(sol.tau == 0.0);
    CHECK(sol.p_col == 0.0);
    CHECK(sol.p_eq == doctest::Approx(0.1));
    CHECK(sol.q == 0.0);
    CHECK(sol.expected_slot == doctest::Approx(20e-6));
}

TEST_CASE("solve: lone saturated station") {
    ScenarioParams s;
    s.n_stations = 1;
    s.saturated = true;
    const auto sol = solve_equilibrium(s, ProtocolTiming{});
    CHECK(sol.tau == doctest::Approx(2.0 / 33).epsilon(1e-9));
    CHECK(sol.p_eq == 0.0);
}

TEST_CASE("solve: saturated N = 10 against the bisection oracle") {
    ScenarioParams s;
    s.saturated = true;
    s.payload_bits = 1024 * 8;
    const ProtocolTiming t;
    const auto sol = solve_equilibrium(s, t);
    const auto os = oracle::default_slots(1024 * 8.0);
    const double tau = oracle::solve_tau(10, 0.0, true, 32, 5, 0.0, os);
    CHECK(std::abs(sol.tau - tau) <= 1e-9);
    const double s_oracle = oracle::throughput_of_tau(tau, 10, 0.0, 8192, os);
    CHECK(throughput(sol, s.payload_bits, 0.0, slot_durations(t, s.payload_bits)) == doctest::Approx(s_oracle).epsilon(1e-8));
}

TEST_CASE("solve: non-saturated loads against the bisection oracle") {
    const ProtocolTiming t;
    for (double lambda : {0.5, 3.0, 6.0, 12.0, 100.0}) {
        for (double pe : {0.0, 0.3}) {
            ScenarioParams s;
            s.lambda = lambda;
            s.payload_bits = 2312 * 8;
            s.packet_error_prob = pe;
            const auto sol = solve_equilibrium(s, t);
            const double tau = oracle::solve_tau(10, lambda, false, 32, 5, pe, oracle::default_slots(2312 * 8.0));
            CAPTURE(lambda);
            CAPTURE(pe);
            CHECK(std::abs(sol.tau - tau) <= 1e-9);
        }
    }
}

TEST_CASE("solve: residuals re-verified from scratch") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ProtocolTiming t;
    for (int i = 0; i < 60; ++i) {
        ScenarioParams s;
        s.n_stations = 1 + static_cast<int>(u(rng) * 40);
        s.lambda = std::pow(10.0, -2.0 + 5.0 * u(rng));
        s.w0 = 2 + static_cast<int>(u(rng) * 500);
        s.m = static_cast<int>(u(rng) * 7);
        s.payload_bits = 8 * (1 + static_cast<Bits>(u(rng) * 2311));
        s.packet_error_prob = 0.9 * u(rng);
        const auto sol = solve_equilibrium(s, t);
        const auto d = slot_durations(t, s.payload_bits);
        const oracle::Slots os{d.t_success, d.t_collision, d.t_error, d.sigma};
        const double pcol = 1.0 - std::pow(1.0 - sol.tau, s.n_stations - 1);
        const double peq = pcol + *s.packet_error_prob - *s.packet_error_prob * pcol;
        const double e = oracle::expected_slot(sol.tau, s.n_stations, *s.packet_error_prob, os);
        const double q = 1.0 - std::exp(-s.lambda * e);
        CHECK(std::abs(sol.p_col - pcol) <= 1e-10);
        CHECK(std::abs(sol.p_eq - peq) <= 1e-10);
        CHECK(std::abs(sol.q - q) <= 1e-10);
        CHECK(std::abs(sol.tau - tau_closed_form(sol.p_eq, sol.q, s.w0, s.m)) <= 1e-10);
        CHECK(sol.residual <= 1e-10);
    }
}

TEST_CASE("solve: tau non-decreasing in lambda") {
    ScenarioParams s;
    s.payload_bits = 2312 * 8;
    double prev = 0.0;
    for (int k = 0; k <= 40; ++k) {
        s.lambda = std::pow(10.0, -3.0 + 6.0 * k / 40.0);
        const double tau = solve_equilibrium(s, ProtocolTiming{}).tau;
        CHECK(tau >= prev - 1e-12);
        prev = tau;
    }
}

TEST_CASE("solve: light-load limit tau (1 - P_e) = q") {
    ScenarioParams s;
    s.lambda = 1e-3;
    s.packet_error_prob = 0.2;
    const auto sol = solve_equilibrium(s, ProtocolTiming{});
    CHECK(std::abs(sol.tau * (1.0 - 0.2) - sol.q) <= 1e-3 * sol.q);
    CHECK(sol.p_eq == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("solve: unreachable tolerance raises a typed failure") {
    ScenarioParams s;
    s.lambda = 7.0;
    SolverSettings st;
    st.tolerance = 1e-300;
    st.max_iterations = 5;
    try {
        (void)solve_equilibrium(s, ProtocolTiming{}, st);
        FAIL("expected SolverFailure");
    } catch (const SolverFailure& e) {
        CHECK(e.residual() > 1e-300);
    }
    SolverSettings bad;
    bad.damping = 0.0;
    CHECK_THROWS_AS(solve_equilibrium(s, ProtocolTiming{}, bad), InvalidParameter);
}

TEST_CASE("solve: deterministic") {
    ScenarioParams s;
    s.lambda = 8.0;
    const auto a = solve_equilibrium(s, ProtocolTiming{});
    const auto b = solve_equilibrium(s, ProtocolTiming{});
    CHECK(a.tau == b.tau);
    CHECK(a.iterations == b.iterations);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vslkit/solver.hpp"

using namespace vslkit;

namespace {

Mvdp one_state(std::size_t na, std::vector<double> r) {
    MvdpSpec spec;
    spec.n_states = 1;
    spec.n_actions = na;
    for (std::size_t a = 0; a < na; ++a) spec.transitions.push_back({0, static_cast<int>(a), 0, 1.0});
    spec.values = ValueSet({"v"});
    spec.rewards = {std::move(r)};
    spec.feature_dim = 1;
    spec.features.assign(na, 0.0);
    return Mvdp::build(std::move(spec));
}

void check_rows(const Policy& pi) {
    for (std::size_t s = 0; s < pi.n_states(); ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < pi.action_count(static_cast<int>(s)); ++a) sum += pi(static_cast<int>(s), static_cast<int>(a));
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

}  // namespace

TEST_CASE("equal rewards give a uniform policy") {
    for (double c : {-3.0, 0.0, 7.5}) {
        const auto m = one_state(2, {c, c});
        const auto pi = soft_value_iteration(m, m.reward_table(0), 4);
        CHECK(pi(0, 0) == doctest::Approx(0.5));
        CHECK(pi(0, 1) == doctest::Approx(0.5));
    }
}

TEST_CASE("one-step softmax of (ln 3, 0)") {
    const auto m = one_state(2, {std::log(3.0), 0.0});
    const auto pi = soft_value_iteration(m, m.reward_table(0), 1);
    CHECK(pi(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(pi(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("soft value iteration matches the brute-force backup") {
    SUBCASE("3-state chain with two actions") {
        MvdpSpec spec;
        spec.n_states = 3;
        spec.n_actions = 2;
        // action 0 stays, action 1 advances (last state wraps to 0)
        for (int s = 0; s < 3; ++s) {
            spec.transitions.push_back({s, 0, s, 1.0});
            spec.transitions.push_back({s, 1, (s + 1) % 3, 1.0});
        }
        spec.values = ValueSet({"v"});
        spec.rewards = {{0.1, -0.2, 0.5, 0.0, -1.0, 2.0}};
        spec.feature_dim = 1;
        spec.features.assign(6, 0.0);
        const auto m = Mvdp::build(spec);
        for (std::size_t h : {1u, 2u, 5u, 12u}) {
            const auto pi = soft_value_iteration(m, m.reward_table(0), h);
            CHECK(testsupport::max_abs_diff(pi.probs(), testsupport::soft_policy_oracle(m, m.reward_table(0), h)) < 1e-12);
        }
    }
    SUBCASE("random stochastic processes") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto m = testsupport::random_mvdp(6, 3, 1, 1, seed);
            const auto pi = soft_value_iteration(m, m.reward_table(0), 7);
            check_rows(pi);
            CHECK(testsupport::max_abs_diff(pi.probs(), testsupport::soft_policy_oracle(m, m.reward_table(0), 7)) < 1e-12);
        }
    }
}

TEST_CASE("policy is invariant to a constant reward shift") {
    const auto m = testsupport::random_mvdp(8, 4, 1, 1, 42);
    const auto base = soft_value_iteration(m, m.reward_table(0), 30);
    for (double c : {-10.0, 10.0}) {
        auto r = m.reward_table(0);
        for (auto& x : r) x += c;
        CHECK(testsupport::max_abs_diff(soft_value_iteration(m, r, 30).probs(), base.probs()) < 1e-8);
    }
}

TEST_CASE("raising one reward never lowers that action's probability") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto m = testsupport::random_mvdp(6, 3, 1, 1, 17 + seed);
        const auto base = soft_value_iteration(m, m.reward_table(0), 10);
        for (int s = 0; s < 6; ++s)
            for (int a = 0; a < 3; ++a) {
                auto r = m.reward_table(0);
                r[m.cell(s, a)] += 1.0;
                CHECK(soft_value_iteration(m, r, 10)(s, a) >= base(s, a));
            }
    }
}

TEST_CASE("non-finite rewards are rejected") {
    const auto m = one_state(2, {0.0, 0.0});
    CHECK_THROWS_AS(soft_value_iteration(m, {0.0, std::nan("")}, 3), std::domain_error);
    CHECK_THROWS_AS(soft_value_iteration(m, {0.0, 0.0}, 0), std::invalid_argument);
}

TEST_CASE("visitation on a deterministic path") {
    const auto m = testsupport::chain_mvdp(4, {0, 0, 0, 0});
    const auto mu = visitation_from_policy(m, Policy::uniform(m), 3);
    CHECK(mu(0, 0) == 1.0);
    CHECK(mu(1, 0) == 1.0);
    CHECK(mu(2, 0) == 1.0);
    CHECK(mu(3, 0) == 0.0);
}

TEST_CASE("uniform policy on a symmetric two-state process") {
    MvdpSpec spec;
    spec.n_states = 2;
    spec.n_actions = 2;
    for (int s = 0; s < 2; ++s) {
        spec.transitions.push_back({s, 0, s, 1.0});
        spec.transitions.push_back({s, 1, 1 - s, 1.0});
    }
    spec.values = ValueSet({"v"});
    spec.rewards = {{0, 0, 0, 0}};
    spec.feature_dim = 1;
    spec.features.assign(4, 0.0);
    const auto m = Mvdp::build(spec);
    const auto mu = visitation_from_policy(m, Policy::uniform(m), 9);
    CHECK(mu(0, 0) == doctest::Approx(mu(1, 0)));
    CHECK(mu(0, 1) == doctest::Approx(mu(1, 1)));
    CHECK(mu(0, 0) == doctest::Approx(mu(0, 1)));
}

TEST_CASE("visitation matches a Monte-Carlo estimate") {
    const auto m = testsupport::random_mvdp(5, 3, 1, 1, 7);
    const auto pi = soft_value_iteration(m, m.reward_table(0), 6);
    const auto mu = visitation_from_policy(m, pi, 6);
    CHECK(mu.total() == doctest::Approx(6.0).epsilon(1e-9));
    const auto trajs = sample_trajectories(m, pi, 100000, 6, 123);
    const auto emp = visitation_from_trajectories(trajs, m.n_states(), m.n_actions());
    CHECK(testsupport::max_abs_diff(mu.mu, emp.mu) < 1e-2);
}

TEST_CASE("visitation mass equals the horizon") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto m = testsupport::random_mvdp(10, 4, 1, 1, seed);
        const auto pi = soft_value_iteration(m, m.reward_table(0), 25);
        CHECK(std::abs(visitation_from_policy(m, pi, 25).total() - 25.0) < 1e-6);
    }
}

TEST_CASE("empirical visitation") {
    const auto m = testsupport::random_mvdp(3, 2, 1, 1, 1);
    Trajectory t(m, {{0, 0}, {1, 1}, {0, 0}});
    const std::vector<Trajectory> one{t};
    const auto mu = visitation_from_trajectories(one, 3, 2);
    CHECK(mu(0, 0) == 2.0);
    CHECK(mu.total() == 3.0);
    const std::vector<Trajectory> two{t, t};
    CHECK(visitation_from_trajectories(two, 3, 2).mu == mu.mu);
    CHECK_THROWS(visitation_from_trajectories(std::vector<Trajectory>{}, 3, 2));
}

TEST_CASE("empirical visitation converges to the expected one") {
    const auto m = testsupport::random_mvdp(4, 2, 1, 1, 99);
    const auto pi = soft_value_iteration(m, m.reward_table(0), 5);
    const auto mu = visitation_from_policy(m, pi, 5);
    const std::size_t n = 100;
    const auto trajs = sample_trajectories(m, pi, n, 5, 4);
    const auto emp = visitation_from_trajectories(trajs, 4, 2);
    // Each cell count per rollout lies in [0, H]; its std is at most H / 2.
    for (std::size_t c = 0; c < mu.mu.size(); ++c) CHECK(std::abs(mu.mu[c] - emp.mu[c]) <= 3.0 * 2.5 / std::sqrt(double(n)));
}

TEST_CASE("sampling") {
    SUBCASE("deterministic policy and process repeat the same rollout") {
        const auto m = testsupport::chain_mvdp(5, {0, 0, 0, 0, 0});
        const auto trajs = sample_trajectories(m, Policy::uniform(m), 10, 4, 3);
        for (const auto& t : trajs) CHECK(t == trajs.front());
    }
    SUBCASE("stop state at the start gives length-1 rollouts") {
        const auto m = testsupport::chain_mvdp(5, {0, 0, 0, 0, 0});
        const auto trajs = sample_trajectories(m, Policy::uniform(m), 10, 4, 3, std::vector<StateId>{0});
        for (const auto& t : trajs) CHECK(t.size() == 1);
    }
    SUBCASE("action frequencies follow the policy") {
        const auto m = one_state(3, {0.3, -0.4, 1.0});
        const auto pi = soft_value_iteration(m, m.reward_table(0), 1);
        const std::size_t n = 10000;
        const auto trajs = sample_trajectories(m, pi, n, 1, 77);
        std::vector<double> count(3, 0.0);
        for (const auto& t : trajs) count[static_cast<std::size_t>(t.steps()[0].second)] += 1.0;
        for (int a = 0; a < 3; ++a) {
            const double p = pi(0, a);
            CHECK(std::abs(count[a] / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
        }
    }
    SUBCASE("same seed, same rollouts") {
        const auto m = testsupport::random_mvdp(6, 3, 1, 1, 2);
        CHECK(sample_trajectories(m, Policy::uniform(m), 20, 8, 5) == sample_trajectories(m, Policy::uniform(m), 20, 8, 5));
    }
}

TEST_CASE("p-greedy policy") {
    const auto m = one_state(4, {0.0, 1.0, 0.5, 0.2});
    const auto base = soft_value_iteration(m, m.reward_table(0), 1);
    const auto greedy = p_greedy_policy(base, 0.0);
    CHECK(greedy(0, 1) == 1.0);
    CHECK(greedy(0, 0) == 0.0);
    const auto uniform = p_greedy_policy(base, 1.0);
    for (int a = 0; a < 4; ++a) CHECK(uniform(0, a) == doctest::Approx(0.25));
    const auto mixed = p_greedy_policy(base, 0.8);
    CHECK(mixed(0, 1) == doctest::Approx(0.4));
    for (int a : {0, 2, 3}) CHECK(mixed(0, a) == doctest::Approx(0.2));
    check_rows(mixed);
    CHECK_THROWS(p_greedy_policy(base, 1.5));

    // Ties go to the lowest index.
    const auto tie = one_state(3, {1.0, 1.0, 0.0});
    CHECK(p_greedy_policy(soft_value_iteration(tie, tie.reward_table(0), 1), 0.0)(0, 0) == 1.0);
}

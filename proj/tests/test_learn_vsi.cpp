#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "support.hpp"
#include "vslkit/firefighters.hpp"
#include "vslkit/learn_vsi.hpp"
#include "vslkit/solver.hpp"

using namespace vslkit;

namespace {

VisitationMatrix exact_target(const Mvdp& m, std::span<const RewardTable> tables, const std::vector<double>& w,
                              std::size_t h) {
    const auto r = scalarize_rewards(tables, ValueSystemWeights(w));
    return visitation_from_policy(m, soft_value_iteration(m, r, h), h);
}

bool on_simplex(const ValueSystemWeights& w) {
    double s = 0.0;
    for (double x : w.values()) {
        if (x < 0.0) return false;
        s += x;
    }
    return std::abs(s - 1.0) < 1e-9;
}

}  // namespace

TEST_CASE("tvc") {
    VisitationMatrix a{2, 2, {1.0, 0.0, 0.0, 1.0}};
    VisitationMatrix b{2, 2, {0.0, 0.0, 0.0, 1.0}};
    CHECK(tvc(a, b) == 0.25);
    CHECK(tvc(b, a) == tvc(a, b));
    CHECK(tvc(a, a) == 0.0);
    CHECK_THROWS_AS(tvc(a, VisitationMatrix{1, 2, {0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("simplex projection") {
    const auto p = project_to_simplex({0.3, 0.9});
    CHECK(p[0] == doctest::Approx(0.2));
    CHECK(p[1] == doctest::Approx(0.8));
    CHECK(project_to_simplex({-5.0, 2.0, 0.1}) == std::vector<double>{0.0, 1.0, 0.0});
    const std::vector<double> inside{0.1, 0.6, 0.3};
    const auto same = project_to_simplex(inside);
    for (int i = 0; i < 3; ++i) CHECK(same[i] == doctest::Approx(inside[i]).epsilon(1e-14));
    // Optimality: the residual is constant on the support and not larger off it.
    std::mt19937_64 gen(4);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> v(5);
        for (auto& x : v) x = n(gen);
        const auto q = project_to_simplex(v);
        CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        double tau = 0.0;
        for (int i = 0; i < 5; ++i)
            if (q[i] > 0) tau = v[i] - q[i];
        for (int i = 0; i < 5; ++i) {
            CHECK(q[i] >= 0.0);
            if (q[i] > 0) CHECK(v[i] - q[i] == doctest::Approx(tau).epsilon(1e-10));
            else CHECK(v[i] <= tau + 1e-12);
        }
    }
}

TEST_CASE("a single value gives weight one") {
    const auto m = testsupport::random_mvdp(5, 2, 1, 1, 3);
    const auto target = exact_target(m, m.reward_tables(), {1.0}, 6);
    for (auto mode : {WeightMode::Softmax, WeightMode::Projected}) {
        const auto res = train_vsi(m, m.reward_tables(), target, {6, 0.5, 20, 0, mode});
        CHECK(res.weights.values() == std::vector<double>{1.0});
        CHECK(res.final_tvc < 1e-12);
    }
}

TEST_CASE("three-state toy agrees with a grid search") {
    const auto m = testsupport::random_mvdp(3, 2, 2, 1, 21);
    const std::size_t h = 8;
    const auto target = exact_target(m, m.reward_tables(), {0.3, 0.7}, h);
    double best_w = -1.0, best = 1e300;
    for (int i = 0; i <= 1000; ++i) {
        const double w = i / 1000.0;
        const double d = tvc(exact_target(m, m.reward_tables(), {w, 1.0 - w}, h), target);
        if (d < best) best = d, best_w = w;
    }
    CHECK(best_w == doctest::Approx(0.3).epsilon(1e-9));
    for (auto mode : {WeightMode::Softmax, WeightMode::Projected}) {
        const auto res = train_vsi(m, m.reward_tables(), target, {h, 2.0, 2000, 0, mode});
        CHECK(on_simplex(res.weights));
        CHECK(std::abs(res.weights[0] - best_w) < 0.01);
        CHECK(res.final_tvc <= res.tvc_trace.front());
        CHECK(res.tvc_trace.size() == 2000);
    }
}

TEST_CASE("firefighters agent (0.2, 0.8) is recovered from its exact visitation") {
    const auto m = firefighters::build_mvdp(50);
    const auto target = exact_target(m, m.reward_tables(), {0.2, 0.8}, 50);
    const auto res = train_vsi(m, m.reward_tables(), target, {50, 2.0, 300, 0, WeightMode::Projected});
    MESSAGE("weights " << res.weights[0] << ", " << res.weights[1] << " tvc " << res.final_tvc);
    CHECK(std::abs(res.weights[0] - 0.2) <= 0.005);
    CHECK(std::abs(res.weights[1] - 0.8) <= 0.005);
}

TEST_CASE("identification from demonstrations") {
    const auto m = testsupport::random_mvdp(6, 3, 2, 1, 8);
    const std::size_t h = 10;
    const VsiConfig cfg{h, 0.1, 1500, 0, WeightMode::Projected};
    SUBCASE("interior agent") {
        const auto pi = soft_value_iteration(m, scalarize_rewards(m, ValueSystemWeights({0.4, 0.6})), h);
        const auto demos = sample_trajectories(m, pi, 20000, h, 5);
        const auto res = identify_from_trajectories(m, m.reward_tables(), demos, cfg);
        MESSAGE("w0 " << res.weights[0]);
        CHECK(std::abs(res.weights[0] - 0.4) <= 0.02);

        // Duplicating every demo leaves the empirical visitation unchanged.
        std::vector<Trajectory> twice = demos;
        twice.insert(twice.end(), demos.begin(), demos.end());
        const auto res2 = identify_from_trajectories(m, m.reward_tables(), twice, cfg);
        CHECK(res2.weights.values() == res.weights.values());
    }
    SUBCASE("corner agent") {
        const auto pi = soft_value_iteration(m, m.reward_table(0), h);
        const auto demos = sample_trajectories(m, pi, 20000, h, 6);
        const auto res = identify_from_trajectories(m, m.reward_tables(), demos, cfg);
        CHECK(res.weights[0] >= 0.98);
    }
    CHECK_THROWS_AS(identify_from_trajectories(m, m.reward_tables(), std::vector<Trajectory>{}, cfg),
                    std::invalid_argument);
}

TEST_CASE("weights stay on the simplex with aggressive steps") {
    const auto m = testsupport::random_mvdp(5, 3, 3, 1, 12);
    const auto target = exact_target(m, m.reward_tables(), {0.1, 0.1, 0.8}, 6);
    for (double lr : {0.01, 10.0, 1000.0})
        for (auto mode : {WeightMode::Softmax, WeightMode::Projected}) {
            const auto res = train_vsi(m, m.reward_tables(), target, {6, lr, 50, 0, mode});
            CHECK(on_simplex(res.weights));
            for (double t : res.tvc_trace) CHECK(std::isfinite(t));
        }
}

TEST_CASE("reward scale does not move the fixed point") {
    // Scaling every table by c is equivalent to a temperature change of the
    // target; the exact target for the scaled tables is still matched by the same weights.
    const auto m = testsupport::random_mvdp(4, 2, 2, 1, 30);
    std::vector<RewardTable> scaled = m.reward_tables();
    for (auto& t : scaled)
        for (auto& x : t) x *= 3.0;
    const auto target = exact_target(m, scaled, {0.65, 0.35}, 7);
    const auto res = train_vsi(m, scaled, target, {7, 0.1, 3000, 0, WeightMode::Projected});
    CHECK(std::abs(res.weights[0] - 0.65) < 0.01);
}

TEST_CASE("non-finite tables are rejected") {
    const auto m = testsupport::random_mvdp(3, 2, 2, 1, 1);
    auto bad = m.reward_tables();
    bad[1][0] = std::nan("");
    const auto target = exact_target(m, m.reward_tables(), {0.5, 0.5}, 4);
    CHECK_THROWS_AS(train_vsi(m, bad, target, {4, 0.1, 5, 0, WeightMode::Projected}), std::domain_error);
}

TEST_CASE("serialization") {
    const auto m = testsupport::random_mvdp(3, 2, 2, 1, 2);
    const auto target = exact_target(m, m.reward_tables(), {0.5, 0.5}, 4);
    const VsiConfig cfg{4, 0.1, 5, 0, WeightMode::Projected};
    const auto res = train_vsi(m, m.reward_tables(), target, cfg);
    const auto j = vsi_result_to_json(res, cfg);
    CHECK(j.find("\"weights\"") != std::string::npos);
    CHECK(j.find("\"tvc_trace\"") != std::string::npos);
    std::ostringstream csv;
    write_tvc_csv(csv, res.tvc_trace);
    const auto text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

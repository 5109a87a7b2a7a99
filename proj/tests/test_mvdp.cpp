#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "vslkit/firefighters.hpp"
#include "vslkit/mvdp.hpp"
#include "vslkit/roadworld.hpp"
#include "vslkit/solver.hpp"

using namespace vslkit;
namespace ff = vslkit::firefighters;

namespace {

Mvdp two_value_mvdp(std::vector<double> r0, std::vector<double> r1) {
    MvdpSpec spec;
    spec.n_states = 2;
    spec.n_actions = 2;
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) spec.transitions.push_back({s, a, a, 1.0});
    spec.values = ValueSet({"a", "b"});
    spec.rewards = {std::move(r0), std::move(r1)};
    spec.feature_dim = 1;
    spec.features.assign(4, 0.0);
    spec.horizon = 3;
    return Mvdp::build(std::move(spec));
}

}  // namespace

TEST_CASE("weights must lie on the simplex") {
    CHECK_THROWS_AS(ValueSystemWeights({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(ValueSystemWeights({-0.1, 1.1}), std::invalid_argument);
    CHECK_NOTHROW(ValueSystemWeights({0.25, 0.75}));
    const auto w = ValueSystemWeights::normalized({2.0, 1.0});
    CHECK(w[0] == doctest::Approx(2.0 / 3.0));
    CHECK(w[1] == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS(ValueSystemWeights::normalized({0.0, 0.0}));
    CHECK_THROWS(ValueSet({"x", "x"}));
}

TEST_CASE("contain fire on a burning state is aligned 0.8 with professionalism") {
    const auto m = ff::build_mvdp(5);
    ff::State s{2, 1, 0, 0, 3, 0};
    REQUIRE(ff::transition(s, ff::Action::ContainFire).condition != 0);
    Trajectory t(m, {{ff::encode(s), static_cast<int>(ff::Action::ContainFire)}});
    CHECK(trajectory_alignment(m, ff::kProfessionalism, t) == 0.8);
    CHECK(trajectory_alignment(m, ff::kProximity, t) == 0.2);
}

TEST_CASE("evacuating an empty building grounds to (-1, -1)") {
    const auto m = ff::build_mvdp(5);
    ff::State s{1, 0, 1, 1, 3, 1};
    Trajectory t(m, {{ff::encode(s), static_cast<int>(ff::Action::EvacuateOccupants)}});
    const auto g = grounding_of_trajectory(m, t);
    CHECK(g == std::vector<double>{-1.0, -1.0});
}

TEST_CASE("alignment of zero-reward steps is zero") {
    const auto m = two_value_mvdp({0, 0, 0, 0}, {0, 0, 0, 0});
    Trajectory t(m, {{0, 0}, {0, 1}, {1, 1}});
    CHECK(trajectory_alignment(m, 0, t) == 0.0);
    CHECK(grounding_of_trajectory(m, t) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("alignments equal step-by-step accumulation") {
    const auto m = ff::build_mvdp(10);
    const auto pol = Policy::uniform(m);
    const auto trajs = sample_trajectories(m, pol, 20, 5, 11);
    for (const auto& t : trajs) {
        std::vector<double> acc(2, 0.0);
        for (const auto& [s, a] : t.steps()) {
            const auto st = ff::decode(s);
            const auto r = ff::reward(st, static_cast<ff::Action>(a), ff::transition(st, static_cast<ff::Action>(a)));
            acc[0] += r.first;
            acc[1] += r.second;
        }
        const auto g = grounding_of_trajectory(m, t);
        CHECK(g[0] == doctest::Approx(acc[0]).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(acc[1]).epsilon(1e-12));
    }
}

TEST_CASE("roadworld sustainability alignment sums negated fuel features") {
    const auto graph = roadworld::generate_synthetic_network(30, 3);
    const auto table = roadworld::RoadCostTable::defaults();
    const auto dest = graph.edges.back().id;
    const auto m = roadworld::build_mvdp(graph, table, dest, 20);
    const auto norm = roadworld::normalize_costs(graph, table, 20);
    // Walk three steps taking action 0 from a non-destination edge.
    StateId s = 0;
    if (m.is_terminal(s)) s = 1;
    std::vector<Trajectory::Step> steps;
    double expect = 0.0;
    for (int k = 0; k < 3 && !m.is_terminal(s); ++k) {
        steps.emplace_back(s, 0);
        const StateId next = m.successors(s, 0)[0].next;
        expect -= norm[static_cast<std::size_t>(next)].fuel;
        s = next;
    }
    Trajectory t(m, steps);
    CHECK(trajectory_alignment(m, 0, t) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("value system alignment with a basis vector is the single-value alignment") {
    const auto m = testsupport::random_mvdp(5, 3, 3, 2, 1);
    const auto trajs = sample_trajectories(m, Policy::uniform(m), 10, 6, 2);
    for (const auto& t : trajs)
        for (std::size_t v = 0; v < 3; ++v)
            CHECK(value_system_alignment(m, ValueSystemWeights::basis(3, v), t) == trajectory_alignment(m, v, t));
}

TEST_CASE("normalized weights (2,1) over groundings (-1.8, -2.0)") {
    // Two steps whose per-value rewards sum to (-1.8, -2.0).
    const auto m = two_value_mvdp({-1.0, -0.8, 0, 0}, {-1.5, -0.5, 0, 0});
    Trajectory t(m, {{0, 0}, {0, 1}});
    const auto g = grounding_of_trajectory(m, t);
    CHECK(g[0] == doctest::Approx(-1.8));
    CHECK(g[1] == doctest::Approx(-2.0));
    const auto w = ValueSystemWeights::normalized({2.0, 1.0});
    CHECK(value_system_alignment(m, w, t) == doctest::Approx(-1.8667).epsilon(1e-4));
}

TEST_CASE("aggregate-then-sum equals sum-then-aggregate") {
    const auto m = testsupport::random_mvdp(6, 3, 4, 2, 5);
    const auto trajs = sample_trajectories(m, Policy::uniform(m), 25, 8, 9);
    const auto w = ValueSystemWeights::normalized({0.1, 0.2, 0.3, 0.4});
    const auto rj = scalarize_rewards(m, w);
    for (const auto& t : trajs) {
        double stepwise = 0.0;
        for (const auto& [s, a] : t.steps()) stepwise += rj[m.cell(s, a)];
        CHECK(value_system_alignment(m, w, t) == doctest::Approx(stepwise).epsilon(1e-9));
    }
}

TEST_CASE("scalarize_rewards") {
    SUBCASE("opposite rewards cancel at equal weights") {
        const auto m = two_value_mvdp({1, 1, 1, 1}, {-1, -1, -1, -1});
        for (double x : scalarize_rewards(m, ValueSystemWeights({0.5, 0.5}))) CHECK(x == 0.0);
    }
    SUBCASE("basis projection is the table itself") {
        const auto m = ff::build_mvdp(5);
        CHECK(scalarize_rewards(m, ValueSystemWeights({1.0, 0.0})) == m.reward_table(0));
    }
    SUBCASE("elementwise oracle") {
        const auto m = testsupport::random_mvdp(4, 2, 3, 1, 8);
        const ValueSystemWeights w({0.2, 0.5, 0.3});
        const auto rj = scalarize_rewards(m, w);
        for (std::size_t c = 0; c < rj.size(); ++c)
            CHECK(rj[c] == doctest::Approx(0.2 * m.reward_tables()[0][c] + 0.5 * m.reward_tables()[1][c] +
                                           0.3 * m.reward_tables()[2][c]));
    }
}

TEST_CASE("validate_mvdp reports constructed defects") {
    CHECK(validate_mvdp(ff::build_mvdp(5)).empty());

    MvdpSpec spec;
    spec.n_states = 2;
    spec.n_actions = 1;
    spec.transitions = {{0, 0, 1, 0.9}, {1, 0, 1, 1.0}};
    spec.values = ValueSet({"v"});
    spec.rewards = {{0.0, std::nan("")}};
    spec.feature_dim = 1;
    spec.features = {0.0, 0.0};
    const auto m = Mvdp::assemble(spec);
    const auto report = validate_mvdp(m);
    REQUIRE(report.size() == 2);
    CHECK(report[0].find("s=0, a=0") != std::string::npos);
    CHECK(report[1].find("v=0, s=1, a=0") != std::string::npos);
    CHECK_THROWS_AS(Mvdp::build(spec), std::invalid_argument);
}

TEST_CASE("alignment is additive over concatenation") {
    const auto m = testsupport::random_mvdp(5, 2, 2, 1, 3, true);
    Trajectory a(m, {{0, 0}, {1, 1}});
    Trajectory b(m, {{2, 0}, {3, 1}, {4, 0}});
    const auto ab = a.concat(m, b);
    for (std::size_t v = 0; v < 2; ++v)
        CHECK(trajectory_alignment(m, v, ab) ==
              doctest::Approx(trajectory_alignment(m, v, a) + trajectory_alignment(m, v, b)));
    for (std::size_t k = 0; k < m.feature_dim(); ++k)
        CHECK(ab.feature_sum()[k] == doctest::Approx(a.feature_sum()[k] + b.feature_sum()[k]));
}

TEST_CASE("singleton trajectories order like rewards") {
    const auto m = testsupport::random_mvdp(4, 3, 2, 1, 21);
    for (std::size_t v = 0; v < 2; ++v)
        for (int s1 = 0; s1 < 4; ++s1)
            for (int a1 = 0; a1 < 3; ++a1)
                for (int s2 = 0; s2 < 4; ++s2)
                    for (int a2 = 0; a2 < 3; ++a2) {
                        Trajectory t1(m, {{s1, a1}}), t2(m, {{s2, a2}});
                        CHECK((m.reward(v, s1, a1) <= m.reward(v, s2, a2)) ==
                              (trajectory_alignment(m, v, t1) <= trajectory_alignment(m, v, t2)));
                    }
}

TEST_CASE("trajectory construction rejects invalid input") {
    const auto m = testsupport::random_mvdp(3, 2, 1, 1, 4);
    CHECK_THROWS_AS(Trajectory(m, {}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(m, {{3, 0}}), std::out_of_range);
    CHECK_THROWS_AS(Trajectory(m, {{0, 2}}), std::out_of_range);
}

TEST_CASE("json round trip") {
    const auto m = testsupport::random_mvdp(4, 2, 2, 3, 6);
    const auto back = mvdp_from_json(mvdp_to_json(m));
    CHECK(back.n_states() == m.n_states());
    CHECK(back.reward_tables() == m.reward_tables());
    CHECK(back.feature_table() == m.feature_table());
    CHECK(back.initial_dist() == m.initial_dist());
    CHECK(mvdp_to_json(back) == mvdp_to_json(m));

    const auto trajs = sample_trajectories(m, Policy::uniform(m), 5, 4, 1);
    std::stringstream io;
    write_trajectories(io, trajs);
    CHECK(read_trajectories(io, m) == trajs);

    CHECK_THROWS(mvdp_from_json("{\"format\": \"other\"}"));
}

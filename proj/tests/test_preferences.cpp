#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "vslkit/firefighters.hpp"
#include "vslkit/preferences.hpp"
#include "vslkit/solver.hpp"

using namespace vslkit;

namespace {

PreferenceDataset dataset_of(std::size_t pool, std::vector<PreferenceRecord> records) {
    auto m = std::make_shared<const Mvdp>(testsupport::random_mvdp(4, 2, 1, 1, 3));
    PreferenceDataset ds;
    ds.mvdp = m;
    ds.pool = sample_trajectories(*m, Policy::uniform(*m), pool, 3, 1);
    ds.records = std::move(records);
    return ds;
}

}  // namespace

TEST_CASE("quantified comparison") {
    CHECK(quantified_comparison(1.3, 1.3) == 0.5);
    CHECK(quantified_comparison(std::log(3.0), 0.0) == doctest::Approx(0.75).epsilon(1e-14));
    const double tiny = quantified_comparison(-50.0, 0.0);
    CHECK(tiny > 0.0);
    CHECK(tiny < 1e-20);
    CHECK(tiny == doctest::Approx(std::exp(-50.0)).epsilon(1e-12));
    CHECK(quantified_comparison(800.0, -800.0) == 1.0);
    CHECK_THROWS_AS(quantified_comparison(std::nan(""), 0.0), std::invalid_argument);
}

TEST_CASE("comparison properties") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(gen), b = u(gen), c = u(gen);
        CHECK(quantified_comparison(a, b) + quantified_comparison(b, a) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(quantified_comparison(a + c, b + c) == doctest::Approx(quantified_comparison(a, b)).epsilon(1e-9));
        // Strictly increasing until the logistic saturates in double precision.
        if (std::abs(a - b) < 30.0) CHECK(quantified_comparison(a + 0.5, b) > quantified_comparison(a, b));
        CHECK(quantified_comparison(a + 0.5, b) >= quantified_comparison(a, b));
        CHECK(quantified_comparison(a, b) == doctest::Approx(testsupport::logistic(a - b)).epsilon(1e-12));
    }
}

TEST_CASE("ratings") {
    CHECK(comparison_from_ratings(3, 3, 5) == 0.5);
    CHECK(comparison_from_ratings(3, 1, 5) == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(comparison_from_ratings(1, 100, 100) < 1e-40);
    CHECK(comparison_from_ratings(1, 20, 100) < comparison_from_ratings(1, 10, 100));
    CHECK_THROWS_AS(comparison_from_ratings(0, 3, 5), std::out_of_range);
    CHECK_THROWS_AS(comparison_from_ratings(1, 6, 5), std::out_of_range);
}

TEST_CASE("chain connectivity") {
    SUBCASE("spanning chain") {
        const auto ds = dataset_of(4, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.5}});
        const auto r = check_chain_connectivity(ds);
        CHECK(r.connected);
        CHECK(r.components == 1);
    }
    SUBCASE("two disjoint pairs") {
        const auto ds = dataset_of(4, {{0, 1, 0.5}, {2, 3, 0.5}});
        const auto r = check_chain_connectivity(ds);
        CHECK_FALSE(r.connected);
        CHECK(r.components == 2);
    }
}

TEST_CASE("record validation") {
    CHECK_THROWS(dataset_of(3, {{0, 3, 0.5}}).validate());
    CHECK_THROWS(dataset_of(3, {{1, 1, 0.5}}).validate());
    CHECK_THROWS(dataset_of(3, {{0, 1, 1.5}}).validate());
    CHECK_NOTHROW(dataset_of(3, {{0, 1, 1.0}}).validate());
}

TEST_CASE("minimal generated dataset") {
    auto m = std::make_shared<const Mvdp>(firefighters::build_mvdp(10));
    const auto ds = generate_dataset(m, 0, 2, 1, 0.8, 4);
    CHECK(ds.pool.size() == 2);
    REQUIRE(ds.records.size() == 1);
    CHECK(check_chain_connectivity(ds).connected);
    CHECK_THROWS(generate_dataset(m, 0, 5, 3, 0.8, 4));
}

TEST_CASE("generated datasets") {
    auto m = std::make_shared<const Mvdp>(firefighters::build_mvdp(50));
    for (std::size_t v = 0; v < 2; ++v) {
        const auto ds = generate_dataset(m, v, 300, 400, 0.8, 10 + v);
        CHECK_NOTHROW(ds.validate());
        CHECK(ds.pool.size() == 300);
        CHECK(ds.records.size() == 400);
        CHECK(ds.value_index == v);
        const auto conn = check_chain_connectivity(ds);
        CHECK(conn.connected);
        CHECK(conn.components == 1);
        // Pool members are distinct.
        std::set<std::vector<Trajectory::Step>> distinct;
        for (const auto& t : ds.pool) distinct.insert(t.steps());
        CHECK(distinct.size() == ds.pool.size());
        // y replays the ground-truth alignments.
        for (const auto& r : ds.records) {
            const double a = trajectory_alignment(*m, v, ds.pool[r.left]);
            const double b = trajectory_alignment(*m, v, ds.pool[r.right]);
            CHECK(r.y == doctest::Approx(testsupport::logistic(a - b)).epsilon(1e-12));
        }
    }
    const auto again = generate_dataset(m, 0, 300, 400, 0.8, 10);
    const auto first = generate_dataset(m, 0, 300, 400, 0.8, 10);
    CHECK(again.pool == first.pool);
    std::ostringstream a, b;
    write_records(a, again.records);
    write_records(b, first.records);
    CHECK(a.str() == b.str());
}

TEST_CASE("records round trip through JSON lines") {
    const std::vector<PreferenceRecord> recs{{0, 1, 0.25}, {3, 2, 0.1 + 0.2}, {5, 4, 1e-300}};
    std::stringstream io;
    write_records(io, recs);
    const auto back = read_records(io);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].left == recs[i].left);
        CHECK(back[i].right == recs[i].right);
        CHECK(back[i].y == recs[i].y);
    }
    std::istringstream bad("{\"left\": 0, \"right\": 1, \"y\": 0.5}\n{\"left\": 0}\n");
    try {
        read_records(bad);
        FAIL("expected an error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

#pragma once

// Small hand-built processes and brute-force oracles shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "vslkit/mvdp.hpp"

namespace testsupport {

using vslkit::Mvdp;
using vslkit::MvdpSpec;
using vslkit::RewardTable;

/// Random fully connected process: every action has two random successors.
inline Mvdp random_mvdp(std::size_t ns, std::size_t na, std::size_t m, std::size_t p, std::uint64_t seed,
                        bool deterministic = false) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(ns) - 1);
    MvdpSpec spec;
    spec.n_states = ns;
    spec.n_actions = na;
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            const int t1 = pick(gen);
            if (deterministic) {
                spec.transitions.push_back({static_cast<int>(s), static_cast<int>(a), t1, 1.0});
            } else {
                int t2 = pick(gen);
                if (t2 == t1) t2 = (t1 + 1) % static_cast<int>(ns);
                const double q = 0.2 + 0.6 * (u(gen) + 1.0) / 2.0;
                spec.transitions.push_back({static_cast<int>(s), static_cast<int>(a), t1, q});
                spec.transitions.push_back({static_cast<int>(s), static_cast<int>(a), t2, 1.0 - q});
            }
        }
    std::vector<std::string> labels;
    for (std::size_t v = 0; v < m; ++v) labels.push_back("v" + std::to_string(v));
    spec.values = vslkit::ValueSet(labels);
    spec.rewards.assign(m, RewardTable(ns * na));
    for (auto& r : spec.rewards)
        for (auto& x : r) x = u(gen);
    spec.feature_dim = p;
    spec.features.resize(ns * na * p);
    for (auto& x : spec.features) x = (u(gen) + 1.0) / 2.0;
    spec.horizon = 10;
    return Mvdp::build(std::move(spec));
}

/// States 0 -> 1 -> ... -> n-1 with one action; the last state loops.
inline Mvdp chain_mvdp(std::size_t n, std::vector<double> reward) {
    MvdpSpec spec;
    spec.n_states = n;
    spec.n_actions = 1;
    for (std::size_t s = 0; s < n; ++s)
        spec.transitions.push_back({static_cast<int>(s), 0, static_cast<int>(std::min(s + 1, n - 1)), 1.0});
    spec.values = vslkit::ValueSet({"v0"});
    spec.rewards = {std::move(reward)};
    spec.feature_dim = 1;
    spec.features.assign(n, 1.0);
    spec.initial_dist.assign(n, 0.0);
    spec.initial_dist[0] = 1.0;
    spec.horizon = n;
    return Mvdp::build(std::move(spec));
}

/// Brute-force finite-horizon soft backup written against the textbook
/// recursion with explicit (t, s, a) tables.  Returns pi at t = 0.
inline std::vector<double> soft_policy_oracle(const Mvdp& m, const RewardTable& r, std::size_t horizon) {
    const std::size_t ns = m.n_states(), na = m.n_actions();
    std::vector<std::vector<double>> V(horizon + 1, std::vector<double>(ns, 0.0));
    std::vector<std::vector<double>> Q(horizon, std::vector<double>(ns * na, 0.0));
    for (std::size_t t = horizon; t-- > 0;)
        for (std::size_t s = 0; s < ns; ++s) {
            double z = 0.0;
            for (std::size_t a = 0; a < m.action_count(static_cast<int>(s)); ++a) {
                double q = r[s * na + a];
                for (const auto& x : m.successors(static_cast<int>(s), static_cast<int>(a)))
                    q += x.prob * V[t + 1][static_cast<std::size_t>(x.next)];
                Q[t][s * na + a] = q;
                z += std::exp(q);
            }
            V[t][s] = std::log(z);
        }
    std::vector<double> pi(ns * na, 0.0);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < m.action_count(static_cast<int>(s)); ++a)
            pi[s * na + a] = std::exp(Q[0][s * na + a] - V[0][s]);
    return pi;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace testsupport

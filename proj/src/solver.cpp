#include "vslkit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vslkit/rng.hpp"

namespace vslkit {

Policy::Policy(std::vector<std::size_t> action_counts, std::size_t n_actions, std::vector<double> probs)
    : action_counts_(std::move(action_counts)), n_actions_(n_actions), probs_(std::move(probs)) {
    if (probs_.size() != action_counts_.size() * n_actions_) throw std::invalid_argument("Policy: size mismatch");
    for (std::size_t s = 0; s < action_counts_.size(); ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < n_actions_; ++a) {
            double p = probs_[s * n_actions_ + a];
            if (a >= action_counts_[s] && p != 0.0)
                throw std::invalid_argument("Policy: probability on an unavailable action");
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("Policy: probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("Policy: row " + std::to_string(s) + " does not sum to 1");
    }
}

Policy Policy::uniform(const Mvdp& mvdp) {
    std::vector<double> probs(mvdp.n_states() * mvdp.n_actions(), 0.0);
    for (std::size_t s = 0; s < mvdp.n_states(); ++s) {
        auto k = mvdp.action_count(static_cast<StateId>(s));
        for (std::size_t a = 0; a < k; ++a) probs[s * mvdp.n_actions() + a] = 1.0 / static_cast<double>(k);
    }
    return Policy(mvdp.action_counts(), mvdp.n_actions(), std::move(probs));
}

ActionId Policy::argmax(StateId s) const {
    const double* row = probs_.data() + static_cast<std::size_t>(s) * n_actions_;
    std::size_t best = 0;
    for (std::size_t a = 1; a < action_count(s); ++a)
        if (row[a] > row[best]) best = a;
    return static_cast<ActionId>(best);
}

double VisitationMatrix::total() const {
    double t = 0.0;
    for (double x : mu) t += x;
    return t;
}

Policy soft_value_iteration(const Mvdp& mvdp, const RewardTable& reward, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("soft_value_iteration: horizon must be >= 1");
    const std::size_t ns = mvdp.n_states(), na = mvdp.n_actions();
    if (reward.size() != ns * na) throw std::invalid_argument("soft_value_iteration: reward table size mismatch");
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < mvdp.action_count(static_cast<StateId>(s)); ++a)
            if (!std::isfinite(reward[s * na + a])) throw std::domain_error("soft_value_iteration: non-finite reward");

    std::vector<double> v_next(ns, 0.0), v(ns, 0.0), q(ns * na, 0.0);
    for (std::size_t t = horizon; t-- > 0;) {
        for (std::size_t s = 0; s < ns; ++s) {
            const auto k = mvdp.action_count(static_cast<StateId>(s));
            double qmax = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < k; ++a) {
                double qa = reward[s * na + a];
                for (const auto& succ : mvdp.successors(static_cast<StateId>(s), static_cast<ActionId>(a)))
                    qa += succ.prob * v_next[static_cast<std::size_t>(succ.next)];
                q[s * na + a] = qa;
                qmax = std::max(qmax, qa);
            }
            double acc = 0.0;
            for (std::size_t a = 0; a < k; ++a) acc += std::exp(q[s * na + a] - qmax);
            v[s] = qmax + std::log(acc);
        }
        std::swap(v, v_next);
    }
    // v_next now holds V_0 and q holds Q_0.
    std::vector<double> probs(ns * na, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
        const auto k = mvdp.action_count(static_cast<StateId>(s));
        double sum = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            double p = std::exp(q[s * na + a] - v_next[s]);
            probs[s * na + a] = p;
            sum += p;
        }
        if (!std::isfinite(sum) || !(sum > 0.0))
            throw std::domain_error("soft_value_iteration: non-finite policy (invalid reward scale)");
        for (std::size_t a = 0; a < k; ++a) probs[s * na + a] /= sum;
    }
    return Policy(mvdp.action_counts(), na, std::move(probs));
}

VisitationMatrix visitation_from_policy(const Mvdp& mvdp, const Policy& policy, std::size_t horizon) {
    const std::size_t ns = mvdp.n_states(), na = mvdp.n_actions();
    if (policy.n_states() != ns || policy.n_actions() != na)
        throw std::invalid_argument("visitation_from_policy: policy shape mismatch");
    VisitationMatrix out{ns, na, std::vector<double>(ns * na, 0.0)};
    std::vector<double> d = mvdp.initial_dist(), d_next(ns);
    for (std::size_t t = 0; t < horizon; ++t) {
        std::fill(d_next.begin(), d_next.end(), 0.0);
        for (std::size_t s = 0; s < ns; ++s) {
            if (d[s] == 0.0) continue;
            for (std::size_t a = 0; a < mvdp.action_count(static_cast<StateId>(s)); ++a) {
                double m = d[s] * policy(static_cast<StateId>(s), static_cast<ActionId>(a));
                if (m == 0.0) continue;
                out.mu[s * na + a] += m;
                for (const auto& succ : mvdp.successors(static_cast<StateId>(s), static_cast<ActionId>(a)))
                    d_next[static_cast<std::size_t>(succ.next)] += m * succ.prob;
            }
        }
        std::swap(d, d_next);
    }
    return out;
}

VisitationMatrix visitation_from_trajectories(std::span<const Trajectory> trajs, std::size_t n_states,
                                              std::size_t n_actions) {
    if (trajs.empty()) throw std::invalid_argument("visitation_from_trajectories: empty trajectory list");
    VisitationMatrix out{n_states, n_actions, std::vector<double>(n_states * n_actions, 0.0)};
    for (const auto& t : trajs)
        for (const auto& [s, a] : t.steps()) {
            if (s < 0 || static_cast<std::size_t>(s) >= n_states || a < 0 || static_cast<std::size_t>(a) >= n_actions)
                throw std::out_of_range("visitation_from_trajectories: step out of range");
            out.mu[static_cast<std::size_t>(s) * n_actions + static_cast<std::size_t>(a)] += 1.0;
        }
    const double inv = 1.0 / static_cast<double>(trajs.size());
    for (double& x : out.mu) x *= inv;
    return out;
}

namespace {

std::size_t sample_index(Rng& rng, std::span<const double> weights) {
    double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (u < acc) return i;
    }
    // Rounding left u above the accumulated mass.
    return last_positive;
}

}  // namespace

std::vector<Trajectory> sample_trajectories(const Mvdp& mvdp, const Policy& policy, std::size_t count,
                                            std::size_t horizon, std::uint64_t seed,
                                            std::optional<std::vector<StateId>> stop_states) {
    if (count == 0) throw std::invalid_argument("sample_trajectories: count must be >= 1");
    if (horizon == 0) throw std::invalid_argument("sample_trajectories: horizon must be >= 1");
    const std::size_t ns = mvdp.n_states(), na = mvdp.n_actions();
    if (policy.n_states() != ns || policy.n_actions() != na)
        throw std::invalid_argument("sample_trajectories: policy shape mismatch");
    std::vector<bool> stop(ns, false);
    if (stop_states) {
        for (auto s : *stop_states) stop.at(static_cast<std::size_t>(s)) = true;
    } else {
        for (std::size_t s = 0; s < ns; ++s) stop[s] = mvdp.is_terminal(static_cast<StateId>(s));
    }

    std::vector<Trajectory> out;
    out.reserve(count);
    std::vector<Trajectory::Step> steps;
    std::vector<double> succ_w;
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, i));
        steps.clear();
        auto s = static_cast<StateId>(sample_index(rng, mvdp.initial_dist()));
        for (std::size_t t = 0; t < horizon; ++t) {
            std::span<const double> row(policy.probs().data() + static_cast<std::size_t>(s) * na,
                                        mvdp.action_count(s));
            auto a = static_cast<ActionId>(sample_index(rng, row));
            steps.emplace_back(s, a);
            if (stop[static_cast<std::size_t>(s)]) break;
            auto succ = mvdp.successors(s, a);
            if (succ.size() == 1) {
                s = succ[0].next;
            } else {
                succ_w.clear();
                for (const auto& x : succ) succ_w.push_back(x.prob);
                s = succ[sample_index(rng, succ_w)].next;
            }
        }
        out.emplace_back(mvdp, steps);
    }
    return out;
}

Policy p_greedy_policy(const Policy& base, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p_greedy_policy: p must be in [0,1]");
    const std::size_t ns = base.n_states(), na = base.n_actions();
    std::vector<double> probs(ns * na, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
        auto k = base.action_count(static_cast<StateId>(s));
        for (std::size_t a = 0; a < k; ++a) probs[s * na + a] = p / static_cast<double>(k);
        probs[s * na + static_cast<std::size_t>(base.argmax(static_cast<StateId>(s)))] += 1.0 - p;
    }
    return Policy(base.action_counts(), na, std::move(probs));
}

}  // namespace vslkit

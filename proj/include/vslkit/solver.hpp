#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vslkit/mvdp.hpp"

namespace vslkit {

/// Stationary stochastic policy pi[s][a].  Rows sum to one over the actions
/// available at s; unavailable cells hold zero.
class Policy {
public:
    Policy() = default;
    Policy(std::vector<std::size_t> action_counts, std::size_t n_actions, std::vector<double> probs);

    /// Uniform over available actions.
    static Policy uniform(const Mvdp& mvdp);

    std::size_t n_states() const { return action_counts_.size(); }
    std::size_t n_actions() const { return n_actions_; }
    std::size_t action_count(StateId s) const { return action_counts_[static_cast<std::size_t>(s)]; }
    const std::vector<std::size_t>& action_counts() const { return action_counts_; }

    double operator()(StateId s, ActionId a) const {
        return probs_[static_cast<std::size_t>(s) * n_actions_ + static_cast<std::size_t>(a)];
    }
    const std::vector<double>& probs() const { return probs_; }

    /// Lowest-index action with maximal probability.
    ActionId argmax(StateId s) const;

private:
    std::vector<std::size_t> action_counts_;
    std::size_t n_actions_ = 0;
    std::vector<double> probs_;
};

/// Expected (or empirical) state-action visitation counts mu[s][a].
struct VisitationMatrix {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> mu;

    double operator()(StateId s, ActionId a) const {
        return mu[static_cast<std::size_t>(s) * n_actions + static_cast<std::size_t>(a)];
    }
    double total() const;
};

/// Finite-horizon maximum-entropy policy for a scalar reward table.
///
/// Backward recursion with V_H = 0, Q_t(s,a) = R(s,a) + sum_s' T(s,a,s') V_{t+1}(s'),
/// V_t(s) = logsumexp_a Q_t(s,a).  The stationary policy is read off at t = 0:
/// pi(a|s) = exp(Q_0(s,a) - V_0(s)).  Throws std::domain_error on non-finite values.
Policy soft_value_iteration(const Mvdp& mvdp, const RewardTable& reward, std::size_t horizon);

/// Forward pass from the initial distribution: sum over t < horizon of d_t(s) pi(a|s).
VisitationMatrix visitation_from_policy(const Mvdp& mvdp, const Policy& policy, std::size_t horizon);

/// Average per-trajectory count of each (s, a).  Throws on an empty list.
VisitationMatrix visitation_from_trajectories(std::span<const Trajectory> trajs, std::size_t n_states,
                                              std::size_t n_actions);

/// Samples `count` rollouts of at most `horizon` steps.  A rollout stops right
/// after recording a step taken from a stop state.  Without explicit stop
/// states the process' terminal states are used.  Trajectory i draws from
/// the stream derive_seed(seed, i).
std::vector<Trajectory> sample_trajectories(const Mvdp& mvdp, const Policy& policy, std::size_t count,
                                            std::size_t horizon, std::uint64_t seed,
                                            std::optional<std::vector<StateId>> stop_states = std::nullopt);

/// pi'(a|s) = p / |A(s)| + (1 - p) [a = argmax_a base(a|s)], ties to the lowest index.
Policy p_greedy_policy(const Policy& base, double p);

}  // namespace vslkit

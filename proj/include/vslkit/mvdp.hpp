#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vslkit {

using StateId = std::int32_t;
using ActionId = std::int32_t;

/// Ordered, unique, non-empty list of value labels.
class ValueSet {
public:
    ValueSet() = default;
    explicit ValueSet(std::vector<std::string> labels);

    std::size_t size() const { return labels_.size(); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    const std::vector<std::string>& labels() const { return labels_; }

    bool operator==(const ValueSet&) const = default;

private:
    std::vector<std::string> labels_;
};

/// A point on the unit (m-1)-simplex: the weights of a linear value aggregator.
class ValueSystemWeights {
public:
    ValueSystemWeights() = default;
    /// Throws std::invalid_argument unless every w_i >= 0 and sum w_i = 1 within 1e-9.
    explicit ValueSystemWeights(std::vector<double> w);

    /// Rescales a non-negative vector with positive sum onto the simplex.
    static ValueSystemWeights normalized(std::vector<double> w);
    static ValueSystemWeights basis(std::size_t m, std::size_t i);
    static ValueSystemWeights uniform(std::size_t m);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& values() const { return w_; }

private:
    std::vector<double> w_;
};

/// One tabulated scalar per (state, action) cell, row-major by state.
using RewardTable = std::vector<double>;

/// Everything needed to assemble an Mvdp.  Transitions are given sparsely.
struct MvdpSpec {
    struct Transition {
        StateId from;
        ActionId action;
        StateId to;
        double prob;
    };

    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    /// Actions available at each state are 0..count-1.  Empty means all n_actions.
    std::vector<std::size_t> action_counts;
    std::vector<Transition> transitions;
    ValueSet values;
    /// rewards[v] has n_states * n_actions entries.
    std::vector<RewardTable> rewards;
    std::size_t feature_dim = 0;
    /// n_states * n_actions * feature_dim entries.
    std::vector<double> features;
    std::size_t horizon = 1;
    /// Empty means uniform over non-terminal states.
    std::vector<double> initial_dist;
    /// Absorbing stop states (e.g. route destinations).  Empty means none.
    std::vector<bool> terminal;
};

/// Markov value decision process: a multi-objective MDP with one reward table per value.
///
/// Immutable after construction.  States and actions are dense indices; the
/// environment builders own the mapping from structured states.
class Mvdp {
public:
    struct Successor {
        StateId next;
        double prob;
    };

    /// Assembles without checking invariants; call validate_mvdp() for a report.
    static Mvdp assemble(MvdpSpec spec);
    /// Assembles and throws std::invalid_argument listing every violated invariant.
    static Mvdp build(MvdpSpec spec);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    std::size_t n_values() const { return values_.size(); }
    std::size_t feature_dim() const { return feature_dim_; }
    std::size_t horizon() const { return horizon_; }
    const ValueSet& values() const { return values_; }

    std::size_t action_count(StateId s) const { return action_counts_[static_cast<std::size_t>(s)]; }
    const std::vector<std::size_t>& action_counts() const { return action_counts_; }
    bool is_valid(StateId s, ActionId a) const;
    /// Number of (state, action) pairs that are available.
    std::size_t n_valid_pairs() const { return n_valid_pairs_; }

    std::size_t cell(StateId s, ActionId a) const {
        return static_cast<std::size_t>(s) * n_actions_ + static_cast<std::size_t>(a);
    }

    std::span<const Successor> successors(StateId s, ActionId a) const;

    double reward(std::size_t value, StateId s, ActionId a) const { return rewards_[value][cell(s, a)]; }
    const RewardTable& reward_table(std::size_t value) const { return rewards_.at(value); }
    const std::vector<RewardTable>& reward_tables() const { return rewards_; }

    std::span<const double> features(StateId s, ActionId a) const;
    const std::vector<double>& feature_table() const { return features_; }

    const std::vector<double>& initial_dist() const { return initial_dist_; }
    bool is_terminal(StateId s) const { return !terminal_.empty() && terminal_[static_cast<std::size_t>(s)]; }
    const std::vector<bool>& terminal() const { return terminal_; }

    /// Throws std::out_of_range when (s, a) is not an available pair.
    void check_pair(StateId s, ActionId a) const;

    /// Same process with its reward tables replaced (e.g. by learned ones).
    Mvdp with_rewards(std::vector<RewardTable> rewards) const;

private:
    Mvdp() = default;

    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<std::size_t> action_counts_;
    std::size_t n_valid_pairs_ = 0;
    std::vector<std::size_t> succ_offsets_;
    std::vector<Successor> succ_;
    ValueSet values_;
    std::vector<RewardTable> rewards_;
    std::size_t feature_dim_ = 0;
    std::vector<double> features_;
    std::size_t horizon_ = 1;
    std::vector<double> initial_dist_;
    std::vector<bool> terminal_;
};

/// Lists every violated invariant; empty iff the process is well formed.
std::vector<std::string> validate_mvdp(const Mvdp& mvdp);

/// Finite sequence of (state, action) pairs with the cached sum of their feature vectors.
class Trajectory {
public:
    using Step = std::pair<StateId, ActionId>;

    /// Throws std::invalid_argument on an empty step list, std::out_of_range on invalid pairs.
    Trajectory(const Mvdp& mvdp, std::vector<Step> steps);

    const std::vector<Step>& steps() const { return steps_; }
    std::size_t size() const { return steps_.size(); }
    const std::vector<double>& feature_sum() const { return feature_sum_; }

    /// Concatenation; both pieces must belong to the same process.
    Trajectory concat(const Mvdp& mvdp, const Trajectory& tail) const;

    bool operator==(const Trajectory& o) const { return steps_ == o.steps_; }

private:
    std::vector<Step> steps_;
    std::vector<double> feature_sum_;
};

/// Sum of R_v(s, a) along the trajectory.
double trajectory_alignment(const Mvdp& mvdp, std::size_t value_index, const Trajectory& traj);

/// Per-value alignments (G_V evaluated on the trajectory).
std::vector<double> grounding_of_trajectory(const Mvdp& mvdp, const Trajectory& traj);

/// dot(w, grounding_of_trajectory(traj)).
double value_system_alignment(const Mvdp& mvdp, const ValueSystemWeights& weights, const Trajectory& traj);

/// R_j[s][a] = dot(w, R_V(s, a)).
RewardTable scalarize_rewards(const Mvdp& mvdp, const ValueSystemWeights& weights);
RewardTable scalarize_rewards(std::span<const RewardTable> tables, const ValueSystemWeights& weights);

// Serialization.  MVDP documents are versioned JSON; trajectories are JSON lines
// of [[s, a], ...] integer pairs.

std::string mvdp_to_json(const Mvdp& mvdp);
Mvdp mvdp_from_json(const std::string& text);

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajs);
std::vector<Trajectory> read_trajectories(std::istream& in, const Mvdp& mvdp);

}  // namespace vslkit

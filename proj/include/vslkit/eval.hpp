#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "vslkit/mvdp.hpp"
#include "vslkit/solver.hpp"

namespace vslkit {

enum class Preference { Left, Right, Indifferent };

/// Indifferent iff |a - b| <= epsilon (closed band), else Left iff a > b.
Preference ternary_preference(double a, double b, double epsilon);

struct AccuracyReport {
    double accuracy = 0.0;
    std::size_t n_pairs = 0;
    std::size_t n_correct = 0;
    /// Pairs the reference system labels Indifferent.
    std::size_t n_within_epsilon = 0;
    double epsilon = 0.0;
};

/// A linear value system over a grounding given as per-value reward tables.
struct ValueSystem {
    ValueSystemWeights weights;
    std::span<const RewardTable> grounding;
};

/// Sum over the trajectory of dot(w, R(s, a)).
double system_alignment(const Mvdp& mvdp, const ValueSystem& vs, const Trajectory& traj);

using TrajectoryPair = std::pair<Trajectory, Trajectory>;

/// `count` pairs of rollouts of the p-greedy version of the soft policy for
/// `sampling_weights` applied to the process' own rewards.
std::vector<TrajectoryPair> sample_evaluation_pairs(const Mvdp& mvdp, const ValueSystemWeights& sampling_weights,
                                                    std::size_t count, double greedy_p, std::uint64_t seed);

/// Fraction of pairs on which both systems give the same ternary label.  A
/// pair where exactly one side is Indifferent counts as a mismatch.
AccuracyReport agreement_on_pairs(const Mvdp& mvdp, std::span<const TrajectoryPair> pairs, const ValueSystem& reference,
                                  const ValueSystem& candidate, double epsilon);

/// Same aggregator over the true grounding (the process' tables) and `grounding_hat`.
/// Pairs come from the aggregator's own p-greedy policy.
AccuracyReport grounding_equivalence_accuracy(const Mvdp& mvdp_true, std::span<const RewardTable> grounding_hat,
                                              const ValueSystemWeights& aggregator, std::size_t pair_count,
                                              double epsilon, double greedy_p, std::uint64_t seed);

/// True value system vs a learned one; pairs come from the true system's p-greedy policy.
AccuracyReport preference_prediction_accuracy(const Mvdp& mvdp_true, const ValueSystem& true_vs,
                                              const ValueSystem& learned_vs, std::size_t pair_count, double epsilon,
                                              double greedy_p, std::uint64_t seed);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Per-value ground-truth alignment of `n_samples` rollouts: mean and sample std.
std::vector<MeanStd> average_alignments(const Mvdp& mvdp_true, const Policy& policy, std::size_t n_samples,
                                        std::size_t horizon, std::uint64_t seed);

/// CSV rows value,state,action,true_reward,learned_reward for every (value, s, a) cell.
void reward_scatter_export(std::ostream& out, const Mvdp& mvdp_true, std::span<const RewardTable> learned);

/// Sample mean and sample standard deviation (n - 1); std is 0 for fewer than two samples.
MeanStd mean_std(std::span<const double> xs);

}  // namespace vslkit

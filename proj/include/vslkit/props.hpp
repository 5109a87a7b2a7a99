#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vslkit/learn_grounding.hpp"
#include "vslkit/mvdp.hpp"
#include "vslkit/preferences.hpp"

namespace vslkit {

using TrajectoryReward = std::function<double(const Trajectory&)>;

struct OffsetCertificate {
    bool holds = false;
    /// Mean of learned - true over the compared trajectories.
    double offset = 0.0;
    /// max - min of the per-trajectory offsets.
    double spread = 0.0;
};

/// Learned rewards equal true rewards plus one constant on every compared
/// trajectory, within `tol`.  Throws std::invalid_argument on a disconnected dataset.
OffsetCertificate prop1_offset_certificate(const TrajectoryReward& true_rewards, const TrajectoryReward& learned_rewards,
                                           const PreferenceDataset& dataset, double tol);

struct EquivalenceCertificate {
    bool holds = false;
    std::size_t n_checked = 0;
    /// First (aggregator, pair) whose ordering differs, if any.
    std::optional<std::pair<std::size_t, std::size_t>> counterexample;
};

/// Samples simplex aggregators and uniform-policy trajectory pairs of `mvdp`
/// and compares orderings (epsilon = 0) of G and b * G + K per trajectory.
EquivalenceCertificate prop2_equivalence_certificate(const Mvdp& mvdp, double b, std::span<const double> k,
                                                     std::size_t n_aggregators, std::size_t n_pairs,
                                                     std::uint64_t seed);

/// Random toy process: `n_states` states, every action a moves to state a,
/// features uniform in [0, 1]^p, one value per entry of `thetas` with
/// reward dot(theta, phi).
Mvdp make_linear_toy(std::size_t n_states, std::size_t p, const std::vector<std::vector<double>>& thetas,
                     std::size_t horizon, std::uint64_t seed);

/// Random walks of 1..max_len steps from uniform start states.
std::vector<Trajectory> random_walks(const Mvdp& mvdp, std::size_t count, std::size_t max_len, std::uint64_t seed);

/// Least-squares-free oracle: solves [Phi 1] (theta, c) = logit(y_i0) for the
/// linear reward that reproduces the comparisons of every trajectory with the
/// first one.  nullopt when [Phi 1] is not square or is singular.
std::optional<std::vector<double>> prop3_linear_oracle(std::span<const Trajectory> trajs, std::span<const double> y_vs_first);

struct RecoveryReport {
    bool rank_ok = false;
    /// ||theta_hat - theta||_inf of the trained model.
    double recovery_error = 0.0;
    /// ||theta_oracle - theta||_inf.
    double oracle_error = 0.0;
    /// ||theta_hat - theta_oracle||_inf.
    double trained_vs_oracle = 0.0;
    double final_loss = 0.0;
    /// max |learned - true| reward over all (s, a).
    double reward_error = 0.0;
};

/// Trains a linear softmax model on all pairwise comparisons of `trajs` under
/// the linear ground truth of `mvdp` (value 0, weights `theta`) and compares
/// it with the truth and with the oracle.  Recovery is skipped (errors stay 0)
/// when the extended feature matrix is rank deficient.
RecoveryReport prop3_recover(std::shared_ptr<const Mvdp> mvdp, std::span<const double> theta,
                             std::vector<Trajectory> trajs, const TrainConfig& config);

/// Random simplex ground truth (every weight >= 0.5 / p) over p features, p + 1 random walks
/// rejection-sampled until [Phi 1] has rank p + 1 (throws std::runtime_error
/// after 100 tries), then prop3_recover.
RecoveryReport prop3_recovery_experiment(std::size_t p, std::uint64_t seed, const TrainConfig& config);

struct Prop1Experiment {
    OffsetCertificate certificate;
    double final_loss = 0.0;
    double entropy_floor = 0.0;
    bool converged = false;
};

/// Trains a linear softmax model on a connected dataset of `n_trajectories`
/// random walks of a linear toy and certifies the constant offset.
/// `inject_offset` is added to the learned reward of the first trajectory.
/// A batch size of 0 in `config` means full batch (also for prop3).
Prop1Experiment prop1_toy_experiment(std::size_t n_trajectories, std::size_t p, double tol, std::uint64_t seed,
                                     const TrainConfig& config, double inject_offset = 0.0);

}  // namespace vslkit

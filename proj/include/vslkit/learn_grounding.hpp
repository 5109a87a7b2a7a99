#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vslkit/mvdp.hpp"
#include "vslkit/preferences.hpp"

namespace vslkit {

enum class ModelKind { LinearSoftmax, Mlp };

/// Parameterized per-value reward over feature vectors.
///
/// LinearSoftmax: r(x) = dot(softmax(theta), x); `params` holds theta (length p).
/// Mlp: p -> hidden... -> 1 with tanh everywhere and no output bias.
/// Layout per hidden layer l: W_l (rows = out, row-major), then b_l; finally the
/// output weights (length of the last hidden layer).
class RewardModel {
public:
    static RewardModel linear_softmax(std::size_t input_dim, std::uint64_t seed);
    static RewardModel mlp(std::size_t input_dim, std::vector<std::size_t> hidden, std::uint64_t seed);
    /// Throws std::invalid_argument when the parameter count does not match the shape.
    RewardModel(ModelKind kind, std::size_t input_dim, std::vector<std::size_t> hidden, std::vector<double> params);

    ModelKind kind() const { return kind_; }
    std::size_t input_dim() const { return input_dim_; }
    const std::vector<std::size_t>& hidden() const { return hidden_; }
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& params() { return params_; }
    std::size_t n_params() const { return params_.size(); }

    /// softmax(theta); LinearSoftmax only.
    std::vector<double> linear_weights() const;

private:
    ModelKind kind_;
    std::size_t input_dim_;
    std::vector<std::size_t> hidden_;
    std::vector<double> params_;
};

inline const std::vector<std::size_t> kDefaultMlpHidden{50, 100, 50};

std::size_t mlp_param_count(std::size_t input_dim, const std::vector<std::size_t>& hidden);

/// Throws std::invalid_argument on a dimension mismatch.
double model_forward(const RewardModel& model, std::span<const double> features);

/// Sum of per-step rewards; LinearSoftmax evaluates once on the cached feature sum.
double model_trajectory_reward(const RewardModel& model, const Mvdp& mvdp, const Trajectory& traj);

double bt_probability(const RewardModel& model, const Mvdp& mvdp, const Trajectory& left, const Trajectory& right);

/// Mean clamped cross-entropy over the records selected by `batch` (indices into dataset.records).
double grounding_loss(const RewardModel& model, const PreferenceDataset& dataset, std::span<const std::size_t> batch);

/// Exact gradient of grounding_loss with respect to model.params().
std::vector<double> loss_gradient(const RewardModel& model, const PreferenceDataset& dataset,
                                  std::span<const std::size_t> batch);

/// Both at once (one forward pass).
double loss_and_gradient(const RewardModel& model, const PreferenceDataset& dataset, std::span<const std::size_t> batch,
                         std::vector<double>* grad);

/// Mean cross-entropy of p = y itself, the minimum any model can reach.
double entropy_floor(const PreferenceDataset& dataset);

struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    std::size_t steps = 200;
    std::uint64_t seed = 0;
    /// Adam instead of plain gradient descent.
    bool adam = false;
};

struct TrainResult {
    RewardModel model;
    /// Mini-batch loss before each update.
    std::vector<double> loss_trace;
    double initial_full_loss = 0.0;
    double final_full_loss = 0.0;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t step, const std::string& what)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Mini-batch descent: theta -= lr * dL/dtheta on batches of b records drawn from
/// per-epoch shuffles of the records.  Throws DivergenceError on a non-finite loss.
TrainResult train_grounding(const PreferenceDataset& dataset, RewardModel model, const TrainConfig& config);

/// model reward for every (s, a) (invalid pairs are 0).
RewardTable materialize_rewards(const RewardModel& model, const Mvdp& mvdp);

std::string model_to_json(const RewardModel& model);
RewardModel model_from_json(const std::string& text);
void write_loss_csv(std::ostream& out, std::span<const double> trace);

}  // namespace vslkit

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vslkit/mvdp.hpp"
#include "vslkit/solver.hpp"

namespace vslkit {

enum class WeightMode {
    /// Unconstrained logits z, w = softmax(z); the step is taken on z.
    Softmax,
    /// Step on w directly, then Euclidean projection onto the simplex.
    Projected,
};

struct VsiConfig {
    std::size_t horizon = 50;
    double learning_rate = 0.1;
    std::size_t steps = 200;
    std::uint64_t seed = 0;
    WeightMode mode = WeightMode::Softmax;
};

struct VsiResult {
    ValueSystemWeights weights;
    /// TVC with the weights in effect at the start of each iteration.
    std::vector<double> tvc_trace;
    /// TVC of the returned weights.
    double final_tvc = 0.0;
    Policy final_policy;
};

/// Mean absolute difference over all |S| x |A| cells.  Throws std::invalid_argument on a shape mismatch.
double tvc(const VisitationMatrix& mu_hat, const VisitationMatrix& mu);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> v);

/// Maximum-entropy IRL over simplex weights of fixed per-value reward tables.
///
/// Each iteration scalarizes the tables with the current weights, solves for
/// the soft policy, and moves the weights along -g with
/// g_v = sum_{s,a} (mu_hat - mu)(s,a) R_v(s,a).  Learned groundings enter as
/// materialized tables.  Throws std::domain_error on non-finite rewards or gradients.
VsiResult train_vsi(const Mvdp& mvdp, std::span<const RewardTable> reward_tables, const VisitationMatrix& target_mu,
                    const VsiConfig& config);

/// train_vsi against the empirical visitation of `demos`.  Throws std::invalid_argument when demos is empty.
VsiResult identify_from_trajectories(const Mvdp& mvdp, std::span<const RewardTable> reward_tables,
                                     std::span<const Trajectory> demos, const VsiConfig& config);

/// {"weights": [...], "tvc_trace": [...], "final_tvc": x, "config": {...}}
std::string vsi_result_to_json(const VsiResult& result, const VsiConfig& config);
void write_tvc_csv(std::ostream& out, std::span<const double> trace);

}  // namespace vslkit

#include "vslkit/eval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "vslkit/rng.hpp"

namespace vslkit {

Preference ternary_preference(double a, double b, double epsilon) {
    if (std::abs(a - b) <= epsilon) return Preference::Indifferent;
    return a > b ? Preference::Left : Preference::Right;
}

double system_alignment(const Mvdp& mvdp, const ValueSystem& vs, const Trajectory& traj) {
    if (vs.weights.size() != vs.grounding.size())
        throw std::invalid_argument("system_alignment: weight and grounding sizes differ");
    double total = 0.0;
    for (auto [s, a] : traj.steps()) {
        const std::size_t c = mvdp.cell(s, a);
        for (std::size_t v = 0; v < vs.grounding.size(); ++v) total += vs.weights[v] * vs.grounding[v][c];
    }
    return total;
}

std::vector<TrajectoryPair> sample_evaluation_pairs(const Mvdp& mvdp, const ValueSystemWeights& sampling_weights,
                                                    std::size_t count, double greedy_p, std::uint64_t seed) {
    const auto base = soft_value_iteration(mvdp, scalarize_rewards(mvdp, sampling_weights), mvdp.horizon());
    const auto sampler = p_greedy_policy(base, greedy_p);
    auto trajs = sample_trajectories(mvdp, sampler, 2 * count, mvdp.horizon(),
                                     derive_seed(seed, stream_id("eval.pairs")));
    std::vector<TrajectoryPair> pairs;
    pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pairs.emplace_back(std::move(trajs[2 * i]), std::move(trajs[2 * i + 1]));
    return pairs;
}

AccuracyReport agreement_on_pairs(const Mvdp& mvdp, std::span<const TrajectoryPair> pairs, const ValueSystem& reference,
                                  const ValueSystem& candidate, double epsilon) {
    if (pairs.empty()) throw std::invalid_argument("agreement_on_pairs: no pairs");
    AccuracyReport rep;
    rep.n_pairs = pairs.size();
    rep.epsilon = epsilon;
    for (const auto& [l, r] : pairs) {
        const auto want = ternary_preference(system_alignment(mvdp, reference, l), system_alignment(mvdp, reference, r), epsilon);
        const auto got = ternary_preference(system_alignment(mvdp, candidate, l), system_alignment(mvdp, candidate, r), epsilon);
        if (want == Preference::Indifferent) ++rep.n_within_epsilon;
        if (want == got) ++rep.n_correct;
    }
    rep.accuracy = static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_pairs);
    return rep;
}

AccuracyReport grounding_equivalence_accuracy(const Mvdp& mvdp_true, std::span<const RewardTable> grounding_hat,
                                              const ValueSystemWeights& aggregator, std::size_t pair_count,
                                              double epsilon, double greedy_p, std::uint64_t seed) {
    if (grounding_hat.size() != mvdp_true.n_values())
        throw std::invalid_argument("grounding_equivalence_accuracy: grounding has the wrong number of values");
    const auto pairs = sample_evaluation_pairs(mvdp_true, aggregator, pair_count, greedy_p, seed);
    return agreement_on_pairs(mvdp_true, pairs, {aggregator, mvdp_true.reward_tables()}, {aggregator, grounding_hat},
                              epsilon);
}

AccuracyReport preference_prediction_accuracy(const Mvdp& mvdp_true, const ValueSystem& true_vs,
                                              const ValueSystem& learned_vs, std::size_t pair_count, double epsilon,
                                              double greedy_p, std::uint64_t seed) {
    const auto pairs = sample_evaluation_pairs(mvdp_true, true_vs.weights, pair_count, greedy_p, seed);
    return agreement_on_pairs(mvdp_true, pairs, true_vs, learned_vs, epsilon);
}

MeanStd mean_std(std::span<const double> xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return out;
}

std::vector<MeanStd> average_alignments(const Mvdp& mvdp_true, const Policy& policy, std::size_t n_samples,
                                        std::size_t horizon, std::uint64_t seed) {
    if (n_samples == 0) throw std::invalid_argument("average_alignments: n_samples must be positive");
    const auto trajs = sample_trajectories(mvdp_true, policy, n_samples, horizon, seed);
    std::vector<MeanStd> out;
    std::vector<double> xs(n_samples);
    for (std::size_t v = 0; v < mvdp_true.n_values(); ++v) {
        for (std::size_t i = 0; i < n_samples; ++i) xs[i] = trajectory_alignment(mvdp_true, v, trajs[i]);
        out.push_back(mean_std(xs));
    }
    return out;
}

void reward_scatter_export(std::ostream& out, const Mvdp& mvdp_true, std::span<const RewardTable> learned) {
    if (learned.size() != mvdp_true.n_values())
        throw std::invalid_argument("reward_scatter_export: wrong number of learned tables");
    const std::size_t cells = mvdp_true.n_states() * mvdp_true.n_actions();
    for (const auto& t : learned)
        if (t.size() != cells) throw std::invalid_argument("reward_scatter_export: learned table has the wrong size");
    out << "value,state,action,true_reward,learned_reward\n";
    char buf[96];
    for (std::size_t v = 0; v < learned.size(); ++v)
        for (std::size_t s = 0; s < mvdp_true.n_states(); ++s)
            for (std::size_t a = 0; a < mvdp_true.n_actions(); ++a) {
                const std::size_t c = s * mvdp_true.n_actions() + a;
                std::snprintf(buf, sizeof buf, "%.17g,%.17g", mvdp_true.reward_tables()[v][c], learned[v][c]);
                out << mvdp_true.values().label(v) << ',' << s << ',' << a << ',' << buf << '\n';
            }
    if (!out) throw std::runtime_error("reward_scatter_export: write failed");
}

}  // namespace vslkit

#include "vslkit/props.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "vslkit/eval.hpp"
#include "vslkit/rng.hpp"
#include "vslkit/solver.hpp"

namespace vslkit {

OffsetCertificate prop1_offset_certificate(const TrajectoryReward& true_rewards, const TrajectoryReward& learned_rewards,
                                           const PreferenceDataset& dataset, double tol) {
    const auto conn = check_chain_connectivity(dataset);
    if (!conn.connected)
        throw std::invalid_argument("prop1_offset_certificate: comparison graph has " + std::to_string(conn.components) +
                                    " components");
    std::vector<char> used(dataset.pool.size(), 0);
    for (const auto& r : dataset.records) used[r.left] = used[r.right] = 1;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < used.size(); ++i) {
        if (!used[i]) continue;
        const double off = learned_rewards(dataset.pool[i]) - true_rewards(dataset.pool[i]);
        lo = std::min(lo, off);
        hi = std::max(hi, off);
        sum += off;
        ++n;
    }
    OffsetCertificate cert;
    cert.offset = sum / static_cast<double>(n);
    cert.spread = hi - lo;
    cert.holds = cert.spread <= tol;
    return cert;
}

namespace {

std::vector<double> random_simplex_point(Rng& rng, std::size_t m) {
    std::vector<double> w(m);
    for (auto& x : w) x = -std::log(1.0 - rng.uniform());
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= s;
    return w;
}

// Half uniform, half Dirichlet(1): every weight is at least 0.5 / m, which
// keeps softmax logits bounded during training.
std::vector<double> interior_simplex_point(Rng& rng, std::size_t m) {
    auto w = random_simplex_point(rng, m);
    for (auto& x : w) x = 0.5 * x + 0.5 / static_cast<double>(m);
    return w;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

EquivalenceCertificate prop2_equivalence_certificate(const Mvdp& mvdp, double b, std::span<const double> k,
                                                     std::size_t n_aggregators, std::size_t n_pairs,
                                                     std::uint64_t seed) {
    const std::size_t m = mvdp.n_values();
    if (k.size() != m) throw std::invalid_argument("prop2_equivalence_certificate: K must have one entry per value");
    const auto trajs = sample_trajectories(mvdp, Policy::uniform(mvdp), 2 * n_pairs, mvdp.horizon(),
                                           derive_seed(seed, stream_id("prop2.trajectories")));
    std::vector<std::vector<double>> g(trajs.size()), g_hat(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        g[i] = grounding_of_trajectory(mvdp, trajs[i]);
        g_hat[i].resize(m);
        for (std::size_t v = 0; v < m; ++v) g_hat[i][v] = b * g[i][v] + k[v];
    }
    Rng rng(derive_seed(seed, stream_id("prop2.aggregators")));
    EquivalenceCertificate cert;
    cert.holds = true;
    for (std::size_t f = 0; f < n_aggregators; ++f) {
        const auto w = random_simplex_point(rng, m);
        for (std::size_t p = 0; p < n_pairs; ++p) {
            ++cert.n_checked;
            const auto want = ternary_preference(dot(w, g[2 * p]), dot(w, g[2 * p + 1]), 0.0);
            const auto got = ternary_preference(dot(w, g_hat[2 * p]), dot(w, g_hat[2 * p + 1]), 0.0);
            if (want != got && cert.holds) {
                cert.holds = false;
                cert.counterexample = std::make_pair(f, p);
            }
        }
    }
    return cert;
}

Mvdp make_linear_toy(std::size_t n_states, std::size_t p, const std::vector<std::vector<double>>& thetas,
                     std::size_t horizon, std::uint64_t seed) {
    if (n_states < 2 || p < 1 || thetas.empty()) throw std::invalid_argument("make_linear_toy: degenerate shape");
    Rng rng(derive_seed(seed, stream_id("props.toy")));
    MvdpSpec spec;
    spec.n_states = n_states;
    spec.n_actions = n_states;
    spec.feature_dim = p;
    spec.horizon = horizon;
    spec.features.resize(n_states * n_states * p);
    for (auto& x : spec.features) x = rng.uniform();
    std::vector<std::string> labels;
    for (std::size_t v = 0; v < thetas.size(); ++v) {
        if (thetas[v].size() != p) throw std::invalid_argument("make_linear_toy: theta has the wrong length");
        labels.push_back("v" + std::to_string(v));
        RewardTable r(n_states * n_states);
        for (std::size_t c = 0; c < r.size(); ++c)
            r[c] = dot(thetas[v], std::span<const double>(spec.features).subspan(c * p, p));
        spec.rewards.push_back(std::move(r));
    }
    spec.values = ValueSet(labels);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_states; ++a)
            spec.transitions.push_back({static_cast<StateId>(s), static_cast<ActionId>(a), static_cast<StateId>(a), 1.0});
    return Mvdp::build(std::move(spec));
}

std::vector<Trajectory> random_walks(const Mvdp& mvdp, std::size_t count, std::size_t max_len, std::uint64_t seed) {
    if (max_len < 1) throw std::invalid_argument("random_walks: max_len must be >= 1");
    Rng rng(derive_seed(seed, stream_id("props.walks")));
    std::vector<Trajectory> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t len = 1 + rng.below(max_len);
        auto s = static_cast<StateId>(rng.below(mvdp.n_states()));
        std::vector<Trajectory::Step> steps;
        for (std::size_t t = 0; t < len; ++t) {
            const auto a = static_cast<ActionId>(rng.below(mvdp.action_count(s)));
            steps.emplace_back(s, a);
            s = mvdp.successors(s, a).front().next;
        }
        out.emplace_back(mvdp, std::move(steps));
    }
    return out;
}

namespace {

Eigen::MatrixXd extended_features(std::span<const Trajectory> trajs) {
    const std::size_t p = trajs.front().feature_sum().size();
    Eigen::MatrixXd a(static_cast<Eigen::Index>(trajs.size()), static_cast<Eigen::Index>(p + 1));
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        for (std::size_t k = 0; k < p; ++k)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = trajs[i].feature_sum()[k];
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = 1.0;
    }
    return a;
}

bool full_rank(std::span<const Trajectory> trajs) {
    const auto a = extended_features(trajs);
    if (a.rows() != a.cols()) return false;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    return lu.rank() == a.cols();
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

std::optional<std::vector<double>> prop3_linear_oracle(std::span<const Trajectory> trajs, std::span<const double> y_vs_first) {
    if (trajs.empty() || trajs.size() != y_vs_first.size()) return std::nullopt;
    if (!full_rank(trajs)) return std::nullopt;
    const auto a = extended_features(trajs);
    Eigen::VectorXd rhs(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double y = y_vs_first[static_cast<std::size_t>(i)];
        rhs(i) = std::log(y) - std::log1p(-y);
    }
    const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
    return std::vector<double>(sol.data(), sol.data() + sol.size() - 1);
}

RecoveryReport prop3_recover(std::shared_ptr<const Mvdp> mvdp, std::span<const double> theta,
                             std::vector<Trajectory> trajs, const TrainConfig& config) {
    RecoveryReport rep;
    rep.rank_ok = full_rank(trajs);
    if (!rep.rank_ok) return rep;
    const std::size_t n = trajs.size();
    std::vector<double> r(n), y0(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = dot(theta, trajs[i].feature_sum());
    for (std::size_t i = 0; i < n; ++i) y0[i] = quantified_comparison(r[i], r[0]);
    const auto oracle = prop3_linear_oracle(trajs, y0);

    PreferenceDataset ds;
    ds.mvdp = mvdp;
    ds.value_index = 0;
    ds.pool = std::move(trajs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) ds.records.push_back({i, j, quantified_comparison(r[i], r[j])});
    TrainConfig cfg = config;
    if (cfg.batch_size == 0) cfg.batch_size = ds.records.size();
    auto res = train_grounding(ds, RewardModel::linear_softmax(mvdp->feature_dim(), cfg.seed), cfg);
    const auto theta_hat = res.model.linear_weights();
    rep.final_loss = res.final_full_loss;
    rep.recovery_error = max_abs_diff(theta_hat, theta);
    rep.oracle_error = max_abs_diff(*oracle, theta);
    rep.trained_vs_oracle = max_abs_diff(theta_hat, *oracle);
    const auto learned = materialize_rewards(res.model, *mvdp);
    for (std::size_t s = 0; s < mvdp->n_states(); ++s)
        for (std::size_t a = 0; a < mvdp->action_count(static_cast<StateId>(s)); ++a) {
            const auto c = mvdp->cell(static_cast<StateId>(s), static_cast<ActionId>(a));
            rep.reward_error = std::max(rep.reward_error, std::abs(learned[c] - dot(theta, mvdp->features(static_cast<StateId>(s), static_cast<ActionId>(a)))));
        }
    return rep;
}

RecoveryReport prop3_recovery_experiment(std::size_t p, std::uint64_t seed, const TrainConfig& config) {
    if (p < 1) throw std::invalid_argument("prop3_recovery_experiment: p must be >= 1");
    Rng rng(derive_seed(seed, stream_id("prop3.theta")));
    const auto theta = interior_simplex_point(rng, p);
    auto mvdp = std::make_shared<const Mvdp>(make_linear_toy(p + 3, p, {theta}, 5, derive_seed(seed, 1)));
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        auto trajs = random_walks(*mvdp, p + 1, 4, derive_seed(seed, 100 + attempt));
        if (full_rank(trajs)) return prop3_recover(mvdp, theta, std::move(trajs), config);
    }
    throw std::runtime_error("prop3_recovery_experiment: no full-rank trajectory set after 100 tries");
}

Prop1Experiment prop1_toy_experiment(std::size_t n_trajectories, std::size_t p, double tol, std::uint64_t seed,
                                     const TrainConfig& config, double inject_offset) {
    if (n_trajectories < 2) throw std::invalid_argument("prop1_toy_experiment: need at least two trajectories");
    Rng rng(derive_seed(seed, stream_id("prop1.theta")));
    const auto theta = interior_simplex_point(rng, p);
    auto mvdp = std::make_shared<const Mvdp>(make_linear_toy(6, p, {theta}, 5, derive_seed(seed, 1)));
    PreferenceDataset ds;
    ds.mvdp = mvdp;
    ds.pool = random_walks(*mvdp, n_trajectories, 5, derive_seed(seed, 2));
    std::vector<double> r(n_trajectories);
    for (std::size_t i = 0; i < n_trajectories; ++i) r[i] = trajectory_alignment(*mvdp, 0, ds.pool[i]);
    for (std::size_t i = 0; i + 1 < n_trajectories; ++i) ds.records.push_back({i, i + 1, quantified_comparison(r[i], r[i + 1])});
    Rng pairs(derive_seed(seed, stream_id("prop1.pairs")));
    for (std::size_t extra = 0; extra < n_trajectories; ++extra) {
        const auto i = static_cast<std::size_t>(pairs.below(n_trajectories));
        auto j = static_cast<std::size_t>(pairs.below(n_trajectories - 1));
        if (j >= i) ++j;
        ds.records.push_back({i, j, quantified_comparison(r[i], r[j])});
    }
    TrainConfig cfg = config;
    if (cfg.batch_size == 0) cfg.batch_size = ds.records.size();
    const auto res = train_grounding(ds, RewardModel::linear_softmax(p, cfg.seed), cfg);
    Prop1Experiment out;
    out.final_loss = res.final_full_loss;
    out.entropy_floor = entropy_floor(ds);
    out.converged = out.final_loss - out.entropy_floor <= 1e-6;
    const auto& model = res.model;
    out.certificate = prop1_offset_certificate(
        [&](const Trajectory& t) { return trajectory_alignment(*mvdp, 0, t); },
        [&](const Trajectory& t) {
            const double r = model_trajectory_reward(model, *mvdp, t);
            return t == ds.pool.front() ? r + inject_offset : r;
        },
        ds, tol);
    return out;
}

}  // namespace vslkit

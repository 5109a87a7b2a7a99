#include "vslkit/learn_vsi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace vslkit {

double tvc(const VisitationMatrix& mu_hat, const VisitationMatrix& mu) {
    if (mu_hat.n_states != mu.n_states || mu_hat.n_actions != mu.n_actions || mu_hat.mu.size() != mu.mu.size())
        throw std::invalid_argument("tvc: visitation matrices have different shapes");
    if (mu.mu.empty()) throw std::invalid_argument("tvc: empty visitation matrix");
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.mu.size(); ++i) sum += std::abs(mu_hat.mu[i] - mu.mu[i]);
    return sum / static_cast<double>(mu.mu.size());
}

std::vector<double> project_to_simplex(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("project_to_simplex: empty vector");
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, tau = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) tau = t;
    }
    for (auto& x : v) x = std::max(x - tau, 0.0);
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (auto& x : v) x /= s;
    return v;
}

namespace {

std::vector<double> softmax(const std::vector<double>& z) {
    const double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> w(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += (w[i] = std::exp(z[i] - mx));
    for (auto& x : w) x /= sum;
    return w;
}

struct Evaluation {
    Policy policy;
    VisitationMatrix mu_hat;
};

Evaluation evaluate(const Mvdp& mvdp, std::span<const RewardTable> tables, const std::vector<double>& w,
                    std::size_t horizon) {
    const auto reward = scalarize_rewards(tables, ValueSystemWeights::normalized(w));
    auto policy = soft_value_iteration(mvdp, reward, horizon);
    auto mu_hat = visitation_from_policy(mvdp, policy, horizon);
    return {std::move(policy), std::move(mu_hat)};
}

}  // namespace

VsiResult train_vsi(const Mvdp& mvdp, std::span<const RewardTable> reward_tables, const VisitationMatrix& target_mu,
                    const VsiConfig& config) {
    if (config.horizon < 1) throw std::invalid_argument("train_vsi: horizon must be >= 1");
    if (config.steps < 1) throw std::invalid_argument("train_vsi: steps must be >= 1");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train_vsi: learning_rate must be > 0");
    const std::size_t m = reward_tables.size();
    const std::size_t cells = mvdp.n_states() * mvdp.n_actions();
    if (m == 0) throw std::invalid_argument("train_vsi: no reward tables");
    if (target_mu.n_states != mvdp.n_states() || target_mu.n_actions != mvdp.n_actions())
        throw std::invalid_argument("train_vsi: target visitation shape does not match the process");
    for (std::size_t v = 0; v < m; ++v) {
        if (reward_tables[v].size() != cells) throw std::invalid_argument("train_vsi: reward table has the wrong size");
        for (double r : reward_tables[v])
            if (!std::isfinite(r)) throw std::domain_error("train_vsi: NaN or infinite reward in table " + std::to_string(v));
    }

    std::vector<double> z(m, 0.0);
    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    VsiResult res;
    res.tvc_trace.reserve(config.steps);
    std::vector<double> g(m);
    for (std::size_t step = 0; step < config.steps; ++step) {
        if (config.mode == WeightMode::Softmax) w = softmax(z);
        const auto ev = evaluate(mvdp, reward_tables, w, config.horizon);
        res.tvc_trace.push_back(tvc(ev.mu_hat, target_mu));
        for (std::size_t v = 0; v < m; ++v) {
            double acc = 0.0;
            for (std::size_t c = 0; c < cells; ++c) acc += (ev.mu_hat.mu[c] - target_mu.mu[c]) * reward_tables[v][c];
            if (!std::isfinite(acc)) throw std::domain_error("train_vsi: non-finite gradient at step " + std::to_string(step));
            g[v] = acc;
        }
        if (config.mode == WeightMode::Softmax) {
            // Chain rule through softmax: dw/dz = diag(w) - w w^T.
            const double wg = std::inner_product(w.begin(), w.end(), g.begin(), 0.0);
            for (std::size_t v = 0; v < m; ++v) z[v] -= config.learning_rate * w[v] * (g[v] - wg);
        } else {
            for (std::size_t v = 0; v < m; ++v) w[v] -= config.learning_rate * g[v];
            w = project_to_simplex(std::move(w));
        }
    }
    if (config.mode == WeightMode::Softmax) w = softmax(z);
    auto ev = evaluate(mvdp, reward_tables, w, config.horizon);
    res.final_tvc = tvc(ev.mu_hat, target_mu);
    res.weights = ValueSystemWeights::normalized(w);
    res.final_policy = std::move(ev.policy);
    return res;
}

VsiResult identify_from_trajectories(const Mvdp& mvdp, std::span<const RewardTable> reward_tables,
                                     std::span<const Trajectory> demos, const VsiConfig& config) {
    if (demos.empty()) throw std::invalid_argument("identify_from_trajectories: no demonstrations");
    const auto mu = visitation_from_trajectories(demos, mvdp.n_states(), mvdp.n_actions());
    return train_vsi(mvdp, reward_tables, mu, config);
}

std::string vsi_result_to_json(const VsiResult& result, const VsiConfig& config) {
    nlohmann::json j{
        {"weights", result.weights.values()},
        {"tvc_trace", result.tvc_trace},
        {"final_tvc", result.final_tvc},
        {"config",
         {{"horizon", config.horizon},
          {"learning_rate", config.learning_rate},
          {"steps", config.steps},
          {"seed", config.seed},
          {"mode", config.mode == WeightMode::Softmax ? "softmax" : "projected"}}}};
    return j.dump(2);
}

void write_tvc_csv(std::ostream& out, std::span<const double> trace) {
    out << "iteration,tvc\n";
    char buf[64];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", trace[i]);
        out << i << ',' << buf << '\n';
    }
}

}  // namespace vslkit

#include "vslkit/learn_grounding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <json.hpp>

#include "vslkit/rng.hpp"

namespace vslkit {

namespace {

using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using RowMatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr double kLogClamp = 1e-12;

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> w(z.size());
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += (w[i] = std::exp(z[i] - mx));
    for (auto& x : w) x /= sum;
    return w;
}

double sigmoid(double d) {
    if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
    const double e = std::exp(d);
    return e / (1.0 + e);
}

// Activations of an Mlp over a batch of columns; acts[0] is the input.
struct MlpPass {
    std::vector<MatrixXd> acts;
    Eigen::RowVectorXd out;
};

MlpPass mlp_forward(const RewardModel& m, const Eigen::Ref<const MatrixXd>& x) {
    MlpPass pass;
    pass.acts.push_back(x);
    const double* p = m.params().data();
    std::size_t in = m.input_dim();
    for (std::size_t h : m.hidden()) {
        ConstRowMatrixMap w(p, static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(in));
        p += h * in;
        Eigen::Map<const VectorXd> b(p, static_cast<Eigen::Index>(h));
        p += h;
        MatrixXd z = w * pass.acts.back();
        z.colwise() += b;
        pass.acts.push_back(z.array().tanh().matrix());
        in = h;
    }
    Eigen::Map<const VectorXd> wo(p, static_cast<Eigen::Index>(in));
    pass.out = (wo.transpose() * pass.acts.back()).array().tanh().matrix();
    return pass;
}

// Accumulates d(sum_j gout_j * out_j)/dparams into grad.
void mlp_backward(const RewardModel& m, const MlpPass& pass, const Eigen::RowVectorXd& gout, double* grad) {
    const std::size_t layers = m.hidden().size();
    std::vector<std::size_t> offsets;
    std::size_t off = 0, in = m.input_dim();
    for (std::size_t h : m.hidden()) {
        offsets.push_back(off);
        off += h * in + h;
        in = h;
    }
    const auto last = static_cast<Eigen::Index>(in);
    Eigen::RowVectorXd dz = gout.array() * (1.0 - pass.out.array().square());
    Eigen::Map<VectorXd>(grad + off, last) += pass.acts.back() * dz.transpose();
    Eigen::Map<const VectorXd> wo(m.params().data() + off, last);
    MatrixXd delta = wo * dz;  // d/d(activation) of the last hidden layer
    for (std::size_t l = layers; l-- > 0;) {
        const auto h = static_cast<Eigen::Index>(m.hidden()[l]);
        const auto prev = static_cast<Eigen::Index>(l == 0 ? m.input_dim() : m.hidden()[l - 1]);
        MatrixXd dpre = delta.array() * (1.0 - pass.acts[l + 1].array().square());
        RowMatrixMap(grad + offsets[l], h, prev) += dpre * pass.acts[l].transpose();
        Eigen::Map<VectorXd>(grad + offsets[l] + h * prev, h) += dpre.rowwise().sum();
        if (l > 0) {
            ConstRowMatrixMap w(m.params().data() + offsets[l], h, prev);
            delta = w.transpose() * dpre;
        }
    }
}

// Trajectory rewards for the pool members in `ids` with reverse-mode support.
class BatchEvaluator {
public:
    BatchEvaluator(const RewardModel& model, const PreferenceDataset& ds, std::vector<std::size_t> ids)
        : model_(model), ds_(ds), ids_(std::move(ids)) {
        const Mvdp& mvdp = *ds.mvdp;
        if (model.input_dim() != mvdp.feature_dim())
            throw std::invalid_argument("reward model input_dim does not match the feature dimension");
        rewards_.assign(ids_.size(), 0.0);
        if (model.kind() == ModelKind::LinearSoftmax) {
            w_ = softmax(model.params());
            for (std::size_t i = 0; i < ids_.size(); ++i) {
                const auto& fs = ds.pool[ids_[i]].feature_sum();
                rewards_[i] = std::inner_product(w_.begin(), w_.end(), fs.begin(), 0.0);
            }
            return;
        }
        // Mlp: evaluate once per distinct cell.
        const std::size_t p = mvdp.feature_dim();
        std::vector<std::size_t> cells;
        for (std::size_t id : ids_)
            for (auto [s, a] : ds.pool[id].steps()) cells.push_back(mvdp.cell(s, a));
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        cells_ = cells;
        MatrixXd x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(cells.size()));
        const auto& table = mvdp.feature_table();
        for (std::size_t j = 0; j < cells.size(); ++j)
            for (std::size_t k = 0; k < p; ++k)
                x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = table[cells[j] * p + k];
        pass_ = mlp_forward(model, x);
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            double r = 0.0;
            for (auto [s, a] : ds.pool[ids_[i]].steps()) r += pass_.out(column(mvdp.cell(s, a)));
            rewards_[i] = r;
        }
    }

    // Reward of the i-th id.
    double reward(std::size_t i) const { return rewards_[i]; }
    std::size_t index_of(std::size_t pool_id) const {
        return static_cast<std::size_t>(std::lower_bound(ids_.begin(), ids_.end(), pool_id) - ids_.begin());
    }

    // grad += sum_i g[i] * d reward(i) / d params.
    void backward(const std::vector<double>& g, std::vector<double>& grad) const {
        grad.assign(model_.n_params(), 0.0);
        if (model_.kind() == ModelKind::LinearSoftmax) {
            for (std::size_t i = 0; i < ids_.size(); ++i) {
                if (g[i] == 0.0) continue;
                const auto& fs = ds_.pool[ids_[i]].feature_sum();
                for (std::size_t k = 0; k < w_.size(); ++k) grad[k] += g[i] * w_[k] * (fs[k] - rewards_[i]);
            }
            return;
        }
        const Mvdp& mvdp = *ds_.mvdp;
        Eigen::RowVectorXd gout = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(cells_.size()));
        for (std::size_t i = 0; i < ids_.size(); ++i)
            for (auto [s, a] : ds_.pool[ids_[i]].steps()) gout(column(mvdp.cell(s, a))) += g[i];
        mlp_backward(model_, pass_, gout, grad.data());
    }

private:
    Eigen::Index column(std::size_t cell) const {
        return std::lower_bound(cells_.begin(), cells_.end(), cell) - cells_.begin();
    }

    const RewardModel& model_;
    const PreferenceDataset& ds_;
    std::vector<std::size_t> ids_;
    std::vector<double> rewards_;
    std::vector<double> w_;
    std::vector<std::size_t> cells_;
    MlpPass pass_;
};

}  // namespace

std::size_t mlp_param_count(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
    std::size_t n = 0, in = input_dim;
    for (std::size_t h : hidden) {
        n += h * in + h;
        in = h;
    }
    return n + in;
}

RewardModel::RewardModel(ModelKind kind, std::size_t input_dim, std::vector<std::size_t> hidden,
                         std::vector<double> params)
    : kind_(kind), input_dim_(input_dim), hidden_(std::move(hidden)), params_(std::move(params)) {
    if (input_dim_ == 0) throw std::invalid_argument("RewardModel: input_dim must be positive");
    if (kind_ == ModelKind::LinearSoftmax && !hidden_.empty())
        throw std::invalid_argument("RewardModel: linear model has no hidden layers");
    if (kind_ == ModelKind::Mlp && hidden_.empty()) throw std::invalid_argument("RewardModel: mlp needs hidden layers");
    for (std::size_t h : hidden_)
        if (h == 0) throw std::invalid_argument("RewardModel: empty hidden layer");
    const std::size_t expected = kind_ == ModelKind::LinearSoftmax ? input_dim_ : mlp_param_count(input_dim_, hidden_);
    if (params_.size() != expected)
        throw std::invalid_argument("RewardModel: expected " + std::to_string(expected) + " parameters, got " +
                                    std::to_string(params_.size()));
    for (double x : params_)
        if (!std::isfinite(x)) throw std::invalid_argument("RewardModel: non-finite parameter");
}

namespace {
std::vector<double> uniform_init(std::size_t n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream_id("reward_model.init")));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-0.1, 0.1);
    return v;
}
}  // namespace

RewardModel RewardModel::linear_softmax(std::size_t input_dim, std::uint64_t seed) {
    return RewardModel(ModelKind::LinearSoftmax, input_dim, {}, uniform_init(input_dim, seed));
}

RewardModel RewardModel::mlp(std::size_t input_dim, std::vector<std::size_t> hidden, std::uint64_t seed) {
    const std::size_t n = mlp_param_count(input_dim, hidden);
    return RewardModel(ModelKind::Mlp, input_dim, std::move(hidden), uniform_init(n, seed));
}

std::vector<double> RewardModel::linear_weights() const {
    if (kind_ != ModelKind::LinearSoftmax) throw std::logic_error("linear_weights: not a linear model");
    return softmax(params_);
}

double model_forward(const RewardModel& model, std::span<const double> features) {
    if (features.size() != model.input_dim())
        throw std::invalid_argument("model_forward: expected " + std::to_string(model.input_dim()) +
                                    " features, got " + std::to_string(features.size()));
    if (model.kind() == ModelKind::LinearSoftmax) {
        const auto w = softmax(model.params());
        return std::inner_product(w.begin(), w.end(), features.begin(), 0.0);
    }
    Eigen::Map<const MatrixXd> x(features.data(), static_cast<Eigen::Index>(features.size()), 1);
    return mlp_forward(model, x).out(0);
}

double model_trajectory_reward(const RewardModel& model, const Mvdp& mvdp, const Trajectory& traj) {
    if (model.kind() == ModelKind::LinearSoftmax) return model_forward(model, traj.feature_sum());
    if (model.input_dim() != mvdp.feature_dim())
        throw std::invalid_argument("model_trajectory_reward: feature dimension mismatch");
    double r = 0.0;
    for (auto [s, a] : traj.steps()) r += model_forward(model, mvdp.features(s, a));
    return r;
}

double bt_probability(const RewardModel& model, const Mvdp& mvdp, const Trajectory& left, const Trajectory& right) {
    return sigmoid(model_trajectory_reward(model, mvdp, left) - model_trajectory_reward(model, mvdp, right));
}

double loss_and_gradient(const RewardModel& model, const PreferenceDataset& dataset, std::span<const std::size_t> batch,
                         std::vector<double>* grad) {
    if (batch.empty()) throw std::invalid_argument("grounding_loss: empty batch");
    if (!dataset.mvdp) throw std::invalid_argument("grounding_loss: dataset has no process");
    std::vector<std::size_t> ids;
    ids.reserve(2 * batch.size());
    for (std::size_t r : batch) {
        const auto& rec = dataset.records.at(r);
        if (rec.left >= dataset.pool.size() || rec.right >= dataset.pool.size())
            throw std::invalid_argument("grounding_loss: record references a missing trajectory");
        ids.push_back(rec.left);
        ids.push_back(rec.right);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    BatchEvaluator eval(model, dataset, ids);

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> g(ids.size(), 0.0);
    double loss = 0.0;
    for (std::size_t r : batch) {
        const auto& rec = dataset.records[r];
        const std::size_t il = eval.index_of(rec.left), ir = eval.index_of(rec.right);
        const double d = eval.reward(il) - eval.reward(ir);
        const double p = sigmoid(d), q = sigmoid(-d);
        loss -= rec.y * std::log(std::max(p, kLogClamp)) + (1.0 - rec.y) * std::log(std::max(q, kLogClamp));
        // d(-y log p - (1-y) log q)/dd, zero where the clamp is active.
        const double dd = -rec.y * (p > kLogClamp ? q : 0.0) + (1.0 - rec.y) * (q > kLogClamp ? p : 0.0);
        g[il] += dd * inv_n;
        g[ir] -= dd * inv_n;
    }
    if (grad) eval.backward(g, *grad);
    return loss * inv_n;
}

double grounding_loss(const RewardModel& model, const PreferenceDataset& dataset, std::span<const std::size_t> batch) {
    return loss_and_gradient(model, dataset, batch, nullptr);
}

std::vector<double> loss_gradient(const RewardModel& model, const PreferenceDataset& dataset,
                                  std::span<const std::size_t> batch) {
    std::vector<double> grad;
    loss_and_gradient(model, dataset, batch, &grad);
    return grad;
}

double entropy_floor(const PreferenceDataset& dataset) {
    if (dataset.records.empty()) throw std::invalid_argument("entropy_floor: no records");
    double h = 0.0;
    for (const auto& r : dataset.records) {
        if (r.y > 0.0) h -= r.y * std::log(std::max(r.y, kLogClamp));
        if (r.y < 1.0) h -= (1.0 - r.y) * std::log(std::max(1.0 - r.y, kLogClamp));
    }
    return h / static_cast<double>(dataset.records.size());
}

TrainResult train_grounding(const PreferenceDataset& dataset, RewardModel model, const TrainConfig& config) {
    if (config.batch_size < 1) throw std::invalid_argument("train_grounding: batch_size must be >= 1");
    if (config.steps < 1) throw std::invalid_argument("train_grounding: steps must be >= 1");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train_grounding: learning_rate must be > 0");
    if (dataset.records.empty()) throw std::invalid_argument("train_grounding: empty dataset");
    dataset.validate();

    std::vector<std::size_t> all(dataset.records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    TrainResult res{model, {}, 0.0, 0.0};
    res.initial_full_loss = grounding_loss(model, dataset, all);

    Rng rng(derive_seed(config.seed, stream_id("train_grounding.batches")));
    std::vector<std::size_t> order = all;
    std::size_t cursor = order.size();
    const std::size_t b = std::min(config.batch_size, order.size());
    std::vector<std::size_t> batch(b);
    std::vector<double> grad, m1, m2;
    if (config.adam) {
        m1.assign(model.n_params(), 0.0);
        m2.assign(model.n_params(), 0.0);
    }
    res.loss_trace.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
        for (auto& r : batch) {
            if (cursor == order.size()) {
                rng.shuffle(order.begin(), order.end());
                cursor = 0;
            }
            r = order[cursor++];
        }
        const double loss = loss_and_gradient(model, dataset, batch, &grad);
        if (!std::isfinite(loss)) throw DivergenceError(step, "train_grounding: non-finite loss");
        res.loss_trace.push_back(loss);
        auto& theta = model.params();
        if (config.adam) {
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(step + 1));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(step + 1));
            for (std::size_t k = 0; k < theta.size(); ++k) {
                m1[k] = b1 * m1[k] + (1.0 - b1) * grad[k];
                m2[k] = b2 * m2[k] + (1.0 - b2) * grad[k] * grad[k];
                theta[k] -= config.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
            }
        } else {
            for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= config.learning_rate * grad[k];
        }
        for (double x : theta)
            if (!std::isfinite(x)) throw DivergenceError(step, "train_grounding: non-finite parameter");
    }
    res.final_full_loss = grounding_loss(model, dataset, all);
    if (!std::isfinite(res.final_full_loss)) throw DivergenceError(config.steps, "train_grounding: non-finite loss");
    res.model = std::move(model);
    return res;
}

RewardTable materialize_rewards(const RewardModel& model, const Mvdp& mvdp) {
    if (model.input_dim() != mvdp.feature_dim())
        throw std::invalid_argument("materialize_rewards: feature dimension mismatch");
    const std::size_t n = mvdp.n_states() * mvdp.n_actions();
    const std::size_t p = mvdp.feature_dim();
    RewardTable out(n, 0.0);
    Eigen::Map<const MatrixXd> x(mvdp.feature_table().data(), static_cast<Eigen::Index>(p),
                                 static_cast<Eigen::Index>(n));
    if (model.kind() == ModelKind::LinearSoftmax) {
        const auto w = softmax(model.params());
        Eigen::Map<const VectorXd> wv(w.data(), static_cast<Eigen::Index>(p));
        Eigen::Map<Eigen::RowVectorXd>(out.data(), static_cast<Eigen::Index>(n)) = wv.transpose() * x;
    } else {
        Eigen::Map<Eigen::RowVectorXd>(out.data(), static_cast<Eigen::Index>(n)) = mlp_forward(model, x).out;
    }
    for (std::size_t s = 0; s < mvdp.n_states(); ++s)
        for (std::size_t a = mvdp.action_count(static_cast<StateId>(s)); a < mvdp.n_actions(); ++a)
            out[s * mvdp.n_actions() + a] = 0.0;
    return out;
}

std::string model_to_json(const RewardModel& model) {
    std::vector<std::size_t> sizes{model.input_dim()};
    sizes.insert(sizes.end(), model.hidden().begin(), model.hidden().end());
    sizes.push_back(1);
    nlohmann::json j{{"format", "vslkit.reward_model"},
                     {"version", 1},
                     {"kind", model.kind() == ModelKind::LinearSoftmax ? "linear_softmax" : "mlp"},
                     {"input_dim", model.input_dim()},
                     {"layer_sizes", sizes},
                     {"params", model.params()}};
    return j.dump();
}

RewardModel model_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format") != "vslkit.reward_model" || j.at("version") != 1)
            throw std::invalid_argument("unsupported reward model format");
        const std::string kind = j.at("kind");
        if (kind != "linear_softmax" && kind != "mlp") throw std::invalid_argument("unknown model kind " + kind);
        auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        const auto input_dim = j.at("input_dim").get<std::size_t>();
        if (sizes.size() < 2 || sizes.front() != input_dim || sizes.back() != 1)
            throw std::invalid_argument("inconsistent layer_sizes");
        std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
        return RewardModel(kind == "mlp" ? ModelKind::Mlp : ModelKind::LinearSoftmax, input_dim, std::move(hidden),
                           j.at("params").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model_from_json: ") + e.what());
    }
}

void write_loss_csv(std::ostream& out, std::span<const double> trace) {
    out << "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", trace[i]);
        out << i << ',' << buf << '\n';
    }
}

}  // namespace vslkit

#include "vslkit/mvdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vslkit {

namespace {

constexpr double kProbTol = 1e-9;
constexpr int kMvdpFormatVersion = 1;

}  // namespace

ValueSet::ValueSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw std::invalid_argument("ValueSet: at least one value label required");
    std::set<std::string> seen;
    for (const auto& l : labels_) {
        if (l.empty()) throw std::invalid_argument("ValueSet: empty value label");
        if (!seen.insert(l).second) throw std::invalid_argument("ValueSet: duplicate value label '" + l + "'");
    }
}

ValueSystemWeights::ValueSystemWeights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("ValueSystemWeights: empty weight vector");
    double sum = 0.0;
    for (double x : w_) {
        if (!std::isfinite(x) || x < 0.0)
            throw std::invalid_argument("ValueSystemWeights: weights must be finite and non-negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("ValueSystemWeights: weights must sum to 1");
}

ValueSystemWeights ValueSystemWeights::normalized(std::vector<double> w) {
    double sum = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0)
            throw std::invalid_argument("ValueSystemWeights: weights must be finite and non-negative");
        sum += x;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("ValueSystemWeights: weights sum to zero");
    for (double& x : w) x /= sum;
    return ValueSystemWeights(std::move(w));
}

ValueSystemWeights ValueSystemWeights::basis(std::size_t m, std::size_t i) {
    if (i >= m) throw std::out_of_range("ValueSystemWeights::basis: index out of range");
    std::vector<double> w(m, 0.0);
    w[i] = 1.0;
    return ValueSystemWeights(std::move(w));
}

ValueSystemWeights ValueSystemWeights::uniform(std::size_t m) {
    return normalized(std::vector<double>(m, 1.0));
}

Mvdp Mvdp::assemble(MvdpSpec spec) {
    Mvdp m;
    m.n_states_ = spec.n_states;
    m.n_actions_ = spec.n_actions;
    if (m.n_states_ == 0 || m.n_actions_ == 0) throw std::invalid_argument("Mvdp: need at least one state and action");
    m.action_counts_ = spec.action_counts.empty() ? std::vector<std::size_t>(m.n_states_, m.n_actions_)
                                                  : std::move(spec.action_counts);
    if (m.action_counts_.size() != m.n_states_) throw std::invalid_argument("Mvdp: action_counts size mismatch");
    for (auto c : m.action_counts_) {
        if (c == 0 || c > m.n_actions_) throw std::invalid_argument("Mvdp: action count out of range");
        m.n_valid_pairs_ += c;
    }

    const std::size_t cells = m.n_states_ * m.n_actions_;
    // Counting sort of the sparse transitions into per-cell successor lists.
    std::vector<std::size_t> counts(cells + 1, 0);
    for (const auto& t : spec.transitions) {
        if (t.from < 0 || static_cast<std::size_t>(t.from) >= m.n_states_ || t.action < 0 ||
            static_cast<std::size_t>(t.action) >= m.n_actions_ || t.to < 0 ||
            static_cast<std::size_t>(t.to) >= m.n_states_)
            throw std::out_of_range("Mvdp: transition index out of range");
        ++counts[static_cast<std::size_t>(t.from) * m.n_actions_ + static_cast<std::size_t>(t.action) + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    m.succ_offsets_ = counts;
    m.succ_.resize(spec.transitions.size());
    std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
    for (const auto& t : spec.transitions) {
        auto c = static_cast<std::size_t>(t.from) * m.n_actions_ + static_cast<std::size_t>(t.action);
        m.succ_[fill[c]++] = Successor{t.to, t.prob};
    }

    m.values_ = std::move(spec.values);
    m.rewards_ = std::move(spec.rewards);
    if (m.rewards_.size() != m.values_.size()) throw std::invalid_argument("Mvdp: one reward table per value required");
    for (const auto& r : m.rewards_)
        if (r.size() != cells) throw std::invalid_argument("Mvdp: reward table size mismatch");

    m.feature_dim_ = spec.feature_dim;
    m.features_ = std::move(spec.features);
    if (m.feature_dim_ == 0 || m.features_.size() != cells * m.feature_dim_)
        throw std::invalid_argument("Mvdp: feature table size mismatch");

    if (spec.horizon == 0) throw std::invalid_argument("Mvdp: horizon must be positive");
    m.horizon_ = spec.horizon;

    m.terminal_ = std::move(spec.terminal);
    if (!m.terminal_.empty() && m.terminal_.size() != m.n_states_)
        throw std::invalid_argument("Mvdp: terminal flag size mismatch");

    if (spec.initial_dist.empty()) {
        m.initial_dist_.assign(m.n_states_, 0.0);
        std::size_t live = 0;
        for (std::size_t s = 0; s < m.n_states_; ++s)
            if (!m.is_terminal(static_cast<StateId>(s))) ++live;
        if (live == 0) throw std::invalid_argument("Mvdp: every state is terminal");
        for (std::size_t s = 0; s < m.n_states_; ++s)
            if (!m.is_terminal(static_cast<StateId>(s))) m.initial_dist_[s] = 1.0 / static_cast<double>(live);
    } else {
        m.initial_dist_ = std::move(spec.initial_dist);
        if (m.initial_dist_.size() != m.n_states_) throw std::invalid_argument("Mvdp: initial_dist size mismatch");
    }
    return m;
}

Mvdp Mvdp::build(MvdpSpec spec) {
    Mvdp m = assemble(std::move(spec));
    auto report = validate_mvdp(m);
    if (!report.empty()) {
        std::string msg = "Mvdp: invalid process:";
        for (const auto& r : report) msg += "\n  " + r;
        throw std::invalid_argument(msg);
    }
    return m;
}

bool Mvdp::is_valid(StateId s, ActionId a) const {
    return s >= 0 && static_cast<std::size_t>(s) < n_states_ && a >= 0 &&
           static_cast<std::size_t>(a) < action_counts_[static_cast<std::size_t>(s)];
}

void Mvdp::check_pair(StateId s, ActionId a) const {
    if (!is_valid(s, a))
        throw std::out_of_range("state/action (" + std::to_string(s) + ", " + std::to_string(a) + ") out of range");
}

std::span<const Mvdp::Successor> Mvdp::successors(StateId s, ActionId a) const {
    auto c = cell(s, a);
    return {succ_.data() + succ_offsets_[c], succ_offsets_[c + 1] - succ_offsets_[c]};
}

std::span<const double> Mvdp::features(StateId s, ActionId a) const {
    return {features_.data() + cell(s, a) * feature_dim_, feature_dim_};
}

Mvdp Mvdp::with_rewards(std::vector<RewardTable> rewards) const {
    if (rewards.size() != n_values()) throw std::invalid_argument("Mvdp::with_rewards: value count mismatch");
    for (const auto& r : rewards)
        if (r.size() != n_states_ * n_actions_) throw std::invalid_argument("Mvdp::with_rewards: table size mismatch");
    Mvdp copy = *this;
    copy.rewards_ = std::move(rewards);
    return copy;
}

std::vector<std::string> validate_mvdp(const Mvdp& m) {
    std::vector<std::string> report;
    for (std::size_t s = 0; s < m.n_states(); ++s) {
        for (std::size_t a = 0; a < m.action_count(static_cast<StateId>(s)); ++a) {
            auto succ = m.successors(static_cast<StateId>(s), static_cast<ActionId>(a));
            double sum = 0.0;
            bool range_ok = true;
            for (const auto& t : succ) {
                if (!(t.prob >= 0.0 && t.prob <= 1.0)) range_ok = false;
                sum += t.prob;
            }
            std::string where = "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
            if (!range_ok) report.push_back("transition probability outside [0,1] at " + where);
            if (!(std::abs(sum - 1.0) <= kProbTol))
                report.push_back("transition row at " + where + " sums to " + std::to_string(sum));
            for (std::size_t v = 0; v < m.n_values(); ++v) {
                double r = m.reward(v, static_cast<StateId>(s), static_cast<ActionId>(a));
                if (!std::isfinite(r))
                    report.push_back("non-finite reward for value " + m.values().label(v) + " (v=" +
                                     std::to_string(v) + ", s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                     ")");
            }
            for (double f : m.features(static_cast<StateId>(s), static_cast<ActionId>(a)))
                if (!std::isfinite(f)) {
                    report.push_back("non-finite feature at " + where);
                    break;
                }
        }
    }
    double mass = 0.0;
    bool init_ok = true;
    for (double p : m.initial_dist()) {
        if (!(p >= 0.0 && p <= 1.0)) init_ok = false;
        mass += p;
    }
    if (!init_ok) report.push_back("initial_dist entry outside [0,1]");
    if (!(std::abs(mass - 1.0) <= kProbTol)) report.push_back("initial_dist sums to " + std::to_string(mass));
    return report;
}

Trajectory::Trajectory(const Mvdp& mvdp, std::vector<Step> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw std::invalid_argument("Trajectory: empty step list");
    feature_sum_.assign(mvdp.feature_dim(), 0.0);
    for (const auto& [s, a] : steps_) {
        mvdp.check_pair(s, a);
        auto f = mvdp.features(s, a);
        for (std::size_t k = 0; k < f.size(); ++k) feature_sum_[k] += f[k];
    }
}

Trajectory Trajectory::concat(const Mvdp& mvdp, const Trajectory& tail) const {
    std::vector<Step> joined = steps_;
    joined.insert(joined.end(), tail.steps_.begin(), tail.steps_.end());
    return Trajectory(mvdp, std::move(joined));
}

double trajectory_alignment(const Mvdp& mvdp, std::size_t value_index, const Trajectory& traj) {
    if (value_index >= mvdp.n_values()) throw std::out_of_range("trajectory_alignment: value index out of range");
    const auto& table = mvdp.reward_table(value_index);
    double total = 0.0;
    for (const auto& [s, a] : traj.steps()) {
        mvdp.check_pair(s, a);
        total += table[mvdp.cell(s, a)];
    }
    return total;
}

std::vector<double> grounding_of_trajectory(const Mvdp& mvdp, const Trajectory& traj) {
    std::vector<double> g(mvdp.n_values());
    for (std::size_t v = 0; v < g.size(); ++v) g[v] = trajectory_alignment(mvdp, v, traj);
    return g;
}

double value_system_alignment(const Mvdp& mvdp, const ValueSystemWeights& weights, const Trajectory& traj) {
    if (weights.size() != mvdp.n_values())
        throw std::invalid_argument("value_system_alignment: weight dimension mismatch");
    auto g = grounding_of_trajectory(mvdp, traj);
    double total = 0.0;
    for (std::size_t v = 0; v < g.size(); ++v) total += weights[v] * g[v];
    return total;
}

RewardTable scalarize_rewards(std::span<const RewardTable> tables, const ValueSystemWeights& weights) {
    if (weights.size() != tables.size()) throw std::invalid_argument("scalarize_rewards: weight dimension mismatch");
    if (tables.empty()) return {};
    RewardTable out(tables[0].size(), 0.0);
    for (std::size_t v = 0; v < tables.size(); ++v) {
        if (tables[v].size() != out.size()) throw std::invalid_argument("scalarize_rewards: table size mismatch");
        if (weights[v] == 0.0) continue;
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += weights[v] * tables[v][c];
    }
    return out;
}

RewardTable scalarize_rewards(const Mvdp& mvdp, const ValueSystemWeights& weights) {
    return scalarize_rewards(std::span<const RewardTable>(mvdp.reward_tables()), weights);
}

std::string mvdp_to_json(const Mvdp& m) {
    using nlohmann::json;
    json j;
    j["format"] = "vslkit.mvdp";
    j["version"] = kMvdpFormatVersion;
    j["n_states"] = m.n_states();
    j["n_actions"] = m.n_actions();
    j["action_counts"] = m.action_counts();
    j["values"] = m.values().labels();
    j["horizon"] = m.horizon();
    j["initial_dist"] = m.initial_dist();
    json terminal = json::array();
    for (std::size_t s = 0; s < m.n_states(); ++s)
        if (m.is_terminal(static_cast<StateId>(s))) terminal.push_back(s);
    j["terminal_states"] = terminal;
    json trans = json::array();
    for (std::size_t s = 0; s < m.n_states(); ++s)
        for (std::size_t a = 0; a < m.action_count(static_cast<StateId>(s)); ++a)
            for (const auto& t : m.successors(static_cast<StateId>(s), static_cast<ActionId>(a)))
                trans.push_back(json::array({s, a, t.next, t.prob}));
    j["transitions"] = std::move(trans);
    j["rewards"] = m.reward_tables();
    j["feature_dim"] = m.feature_dim();
    j["features"] = m.feature_table();
    return j.dump();
}

Mvdp mvdp_from_json(const std::string& text) {
    using nlohmann::json;
    json j = json::parse(text);
    if (j.value("format", "") != "vslkit.mvdp") throw std::invalid_argument("mvdp_from_json: not an MVDP document");
    if (j.at("version").get<int>() != kMvdpFormatVersion)
        throw std::invalid_argument("mvdp_from_json: unsupported version");
    MvdpSpec spec;
    spec.n_states = j.at("n_states").get<std::size_t>();
    spec.n_actions = j.at("n_actions").get<std::size_t>();
    spec.action_counts = j.at("action_counts").get<std::vector<std::size_t>>();
    spec.values = ValueSet(j.at("values").get<std::vector<std::string>>());
    spec.horizon = j.at("horizon").get<std::size_t>();
    spec.initial_dist = j.at("initial_dist").get<std::vector<double>>();
    auto term = j.at("terminal_states").get<std::vector<std::size_t>>();
    if (!term.empty()) {
        spec.terminal.assign(spec.n_states, false);
        for (auto s : term) spec.terminal.at(s) = true;
    }
    for (const auto& t : j.at("transitions"))
        spec.transitions.push_back({t.at(0).get<StateId>(), t.at(1).get<ActionId>(), t.at(2).get<StateId>(),
                                    t.at(3).get<double>()});
    spec.rewards = j.at("rewards").get<std::vector<RewardTable>>();
    spec.feature_dim = j.at("feature_dim").get<std::size_t>();
    spec.features = j.at("features").get<std::vector<double>>();
    return Mvdp::build(std::move(spec));
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajs) {
    for (const auto& t : trajs) {
        out << '[';
        bool first = true;
        for (const auto& [s, a] : t.steps()) {
            if (!first) out << ',';
            first = false;
            out << '[' << s << ',' << a << ']';
        }
        out << "]\n";
    }
}

std::vector<Trajectory> read_trajectories(std::istream& in, const Mvdp& mvdp) {
    std::vector<Trajectory> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            std::vector<Trajectory::Step> steps;
            steps.reserve(j.size());
            for (const auto& p : j) steps.emplace_back(p.at(0).get<StateId>(), p.at(1).get<ActionId>());
            out.emplace_back(mvdp, std::move(steps));
        } catch (const std::exception& e) {
            throw std::invalid_argument("read_trajectories: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace vslkit

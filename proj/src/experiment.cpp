#include "vslkit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vslkit/firefighters.hpp"
#include "vslkit/preferences.hpp"
#include "vslkit/rng.hpp"
#include "vslkit/solver.hpp"

namespace vslkit::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- settings

namespace {

const std::vector<std::vector<double>> kFirefighterAgents{{1, 0}, {0.8, 0.2}, {0.6, 0.4}, {0.4, 0.6}, {0.2, 0.8}, {0, 1}};
const std::vector<std::vector<double>> kRoadworldAgents{{1, 0, 0},       {0, 1, 0},       {0, 0, 1},
                                                        {0.5, 0.5, 0},   {0.5, 0, 0.5},   {0, 0.5, 0.5},
                                                        {0.33, 0.33, 0.33}, {0.2, 0.4, 0.4}, {0.4, 0.2, 0.4},
                                                        {0, 0.33, 0.67}};

const std::set<std::string> kKnownKeys{
    "environment",        "horizon",            "seed",
    "reps",               "pool_size",          "n_comparisons",
    "greedy_p",           "model",              "mlp_hidden",
    "grounding_batch_size", "grounding_learning_rate", "grounding_steps",
    "grounding_optimizer", "vsi_learning_rate", "vsi_steps",
    "vsi_mode",           "vsi_target",         "vsi_demos",
    "use_true_grounding", "agents",             "aggregators",
    "eval_pairs",         "epsilon",            "alignment_samples",
    "network_nodes",      "network_seed",       "network_file",
    "destination",        "prop1_trajectories", "prop1_features",
    "prop1_tol",          "prop1_inject_offset", "prop2_aggregators",
    "prop2_pairs",        "prop2_b",            "prop3_p",
    "prop3_tol",          "prop_batch_size",    "prop_learning_rate",
    "prop_steps"};

std::size_t positive(const Config& c, const std::string& key, std::size_t fallback) {
    const auto v = c.get_u64(key, fallback);
    if (v == 0) throw ConfigError("config key '" + key + "' must be positive");
    return static_cast<std::size_t>(v);
}

double positive_real(const Config& c, const std::string& key, double fallback) {
    const double v = c.get_double(key, fallback);
    if (!(v > 0.0)) throw ConfigError("config key '" + key + "' must be > 0");
    return v;
}

std::vector<std::vector<double>> weight_grid(const Config& c, const std::string& key,
                                             const std::vector<std::vector<double>>& fallback, std::size_t m) {
    auto grid = c.get_vectors(key, fallback);
    if (grid.empty()) throw ConfigError("config key '" + key + "' lists no weight vectors");
    for (auto& w : grid) {
        if (m != 0 && w.size() != m)
            throw ConfigError("config key '" + key + "': weight vectors need " + std::to_string(m) + " entries");
        try {
            w = ValueSystemWeights::normalized(w).values();
        } catch (const std::exception& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
    return grid;
}

}  // namespace

Settings load_settings(const Config& c) {
    c.check_known(kKnownKeys);
    Settings s;
    s.config_hash = c.hash();
    const std::string env = c.get_string("environment", "");
    std::size_t m = 0;
    if (env == "firefighters") {
        s.environment = Environment::Firefighters;
        m = 2;
    } else if (env == "roadworld") {
        s.environment = Environment::Roadworld;
        m = 3;
    } else if (!env.empty()) {
        throw ConfigError("unknown environment '" + env + "' (expected firefighters or roadworld)");
    }
    const bool ff = s.environment != Environment::Roadworld;
    s.horizon = positive(c, "horizon", 50);
    s.seed = c.get_u64("seed", 0);
    s.reps = positive(c, "reps", 1);

    s.pool_size = positive(c, "pool_size", ff ? 9000 : 2500);
    s.n_comparisons = positive(c, "n_comparisons", ff ? 10000 : 7000);
    if (s.pool_size < 2) throw ConfigError("config key 'pool_size' must be >= 2");
    if (s.n_comparisons + 1 < s.pool_size) throw ConfigError("n_comparisons must be >= pool_size - 1");
    s.greedy_p = c.get_double("greedy_p", 0.8);
    if (s.greedy_p < 0.0 || s.greedy_p > 1.0) throw ConfigError("config key 'greedy_p' must be in [0, 1]");

    const std::string model = c.get_string("model", ff ? "mlp" : "linear_softmax");
    if (model == "mlp")
        s.model = ModelKind::Mlp;
    else if (model == "linear_softmax")
        s.model = ModelKind::LinearSoftmax;
    else
        throw ConfigError("unknown model '" + model + "' (expected mlp or linear_softmax)");
    s.mlp_hidden.clear();
    for (double h : c.get_doubles("mlp_hidden", {50, 100, 50})) {
        if (h < 1 || h != std::floor(h)) throw ConfigError("config key 'mlp_hidden' needs positive integers");
        s.mlp_hidden.push_back(static_cast<std::size_t>(h));
    }
    s.grounding.batch_size = positive(c, "grounding_batch_size", 32);
    s.grounding.learning_rate = positive_real(c, "grounding_learning_rate", 0.01);
    s.grounding.steps = positive(c, "grounding_steps", 200);
    const std::string opt = c.get_string("grounding_optimizer", "sgd");
    if (opt != "sgd" && opt != "adam") throw ConfigError("unknown grounding_optimizer '" + opt + "'");
    s.grounding.adam = opt == "adam";

    s.vsi.horizon = s.horizon;
    s.vsi.learning_rate = positive_real(c, "vsi_learning_rate", 0.1);
    s.vsi.steps = positive(c, "vsi_steps", 200);
    const std::string mode = c.get_string("vsi_mode", "softmax");
    if (mode == "softmax")
        s.vsi.mode = WeightMode::Softmax;
    else if (mode == "projected")
        s.vsi.mode = WeightMode::Projected;
    else
        throw ConfigError("unknown vsi_mode '" + mode + "' (expected softmax or projected)");
    const std::string target = c.get_string("vsi_target", "policy");
    if (target != "policy" && target != "trajectories")
        throw ConfigError("unknown vsi_target '" + target + "' (expected policy or trajectories)");
    s.vsi_target_from_policy = target == "policy";
    s.vsi_demos = positive(c, "vsi_demos", 1000);
    s.use_true_grounding = c.get_bool("use_true_grounding", false);
    s.agents = weight_grid(c, "agents", ff ? kFirefighterAgents : kRoadworldAgents, m);
    s.aggregators = weight_grid(c, "aggregators", s.agents, m);

    s.eval_pairs = positive(c, "eval_pairs", 1000);
    s.epsilon = c.get_double("epsilon", 0.04);
    if (s.epsilon < 0.0) throw ConfigError("config key 'epsilon' must be >= 0");
    s.alignment_samples = positive(c, "alignment_samples", 1000);

    s.network_nodes = positive(c, "network_nodes", 357);
    s.network_seed = c.get_u64("network_seed", 7);
    s.network_file = c.get_string("network_file", "");
    s.destination = c.get_string("destination", "auto");

    auto& p = s.props;
    p.prop1_trajectories = positive(c, "prop1_trajectories", p.prop1_trajectories);
    p.prop1_features = positive(c, "prop1_features", p.prop1_features);
    p.prop1_tol = positive_real(c, "prop1_tol", p.prop1_tol);
    p.prop1_inject_offset = c.get_double("prop1_inject_offset", 0.0);
    p.prop2_aggregators = positive(c, "prop2_aggregators", p.prop2_aggregators);
    p.prop2_pairs = positive(c, "prop2_pairs", p.prop2_pairs);
    p.prop2_b = c.get_doubles("prop2_b", p.prop2_b);
    p.prop3_p = c.get_doubles("prop3_p", p.prop3_p);
    for (double x : p.prop3_p)
        if (x < 1 || x != std::floor(x)) throw ConfigError("config key 'prop3_p' needs positive integers");
    p.prop3_tol = positive_real(c, "prop3_tol", p.prop3_tol);
    p.train.batch_size = static_cast<std::size_t>(c.get_u64("prop_batch_size", 0));
    p.train.learning_rate = positive_real(c, "prop_learning_rate", p.train.learning_rate);
    p.train.steps = positive(c, "prop_steps", p.train.steps);
    p.train.seed = derive_seed(s.seed, stream_id("props.train"));
    return s;
}

// ---------------------------------------------------------------- environment

EnvironmentInstance build_environment(const Settings& s) {
    EnvironmentInstance inst;
    if (s.environment == Environment::Firefighters) {
        inst.mvdp = std::make_shared<const Mvdp>(firefighters::build_mvdp(s.horizon));
        return inst;
    }
    if (s.environment != Environment::Roadworld) throw ConfigError("config key 'environment' is required");
    roadworld::RoadGraph graph;
    if (!s.network_file.empty()) {
        if (!fs::exists(s.network_file)) throw IoError("network file not found: " + s.network_file);
        try {
            graph = roadworld::load_graph(fs::path(s.network_file));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    } else {
        graph = roadworld::generate_synthetic_network(s.network_nodes, s.network_seed);
    }
    if (s.destination == "auto") {
        // Lowest-id edge entering the highest-id node.
        const auto node = *std::max_element(graph.nodes.begin(), graph.nodes.end());
        for (const auto& e : graph.edges)
            if (e.to == node && (inst.destination_edge < 0 || e.id < inst.destination_edge)) inst.destination_edge = e.id;
        if (inst.destination_edge < 0) throw ConfigError("no edge enters node " + std::to_string(node));
    } else {
        try {
            inst.destination_edge = std::stoll(s.destination);
        } catch (const std::exception&) {
            throw ConfigError("config key 'destination' must be 'auto' or an edge id");
        }
    }
    try {
        inst.mvdp = std::make_shared<const Mvdp>(
            roadworld::build_mvdp(graph, roadworld::RoadCostTable::defaults(), inst.destination_edge, s.horizon));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    inst.graph = std::move(graph);
    return inst;
}

// ---------------------------------------------------------------- file helpers

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

json meta(const Settings& s, const std::string& command) {
    return json{{"tool", "vslkit"},
                {"version", kVersion},
                {"artifact_version", 1},
                {"config_hash", s.config_hash},
                {"seed", s.seed},
                {"command", command}};
}

void write_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw IoError("write failed: " + path.string());
}

// Writes `content` and a `<name>.meta.json` sidecar with run metadata.
// CSV files get CRLF record separators; library writers emit plain newlines.
std::string crlf(const std::string& text) {
    std::string out;
    out.reserve(text.size() + text.size() / 16);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n' && (i == 0 || text[i - 1] != '\r')) out += '\r';
        out += text[i];
    }
    return out;
}

void write_artifact(const fs::path& path, const std::string& content, const Settings& s, const std::string& command) {
    write_file(path, path.extension() == ".csv" ? crlf(content) : content);
    json m = meta(s, command);
    m["file"] = path.filename().string();
    write_file(path.string() + ".meta.json", m.dump(2) + "\n");
}

std::string read_file(const fs::path& path) {
    if (!fs::exists(path)) throw MissingArtifact("missing artifact " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

// RFC-4180 table with CRLF line endings.
class Csv {
public:
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            const auto& c = cells[i];
            if (c.find_first_of(",\"\r\n") == std::string::npos) {
                text_ += c;
            } else {
                text_ += '"';
                for (char ch : c) {
                    if (ch == '"') text_ += '"';
                    text_ += ch;
                }
                text_ += '"';
            }
        }
        text_ += "\r\n";
    }
    const std::string& str() const { return text_; }

private:
    std::string text_;
};

std::size_t thread_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("VSLKIT_THREADS")) {
        char* end = nullptr;
        const unsigned long cap = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min<std::size_t>(n, cap);
    }
    return n;
}

// Runs fn(0..n-1) on up to thread_count() threads; rethrows the lowest-index failure.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < n;) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string rep_dir(std::size_t r) { return "rep" + std::to_string(r); }

std::uint64_t seed_for(const Settings& s, const char* stage, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    return derive_seed(derive_seed(derive_seed(derive_seed(s.seed, stream_id(stage)), a), b), c);
}

std::shared_ptr<const Mvdp> load_mvdp(const fs::path& out) {
    const auto text = read_file(out / "data" / "mvdp.json");
    try {
        return std::make_shared<const Mvdp>(mvdp_from_json(text));
    } catch (const std::exception& e) {
        throw IoError(std::string("cannot load data/mvdp.json: ") + e.what());
    }
}

PreferenceDataset load_dataset(const fs::path& out, std::shared_ptr<const Mvdp> mvdp, std::size_t v) {
    const std::string label = mvdp->values().label(v);
    PreferenceDataset ds;
    ds.mvdp = mvdp;
    ds.value_index = v;
    try {
        std::istringstream pool(read_file(out / "data" / ("pool_" + label + ".jsonl")));
        ds.pool = read_trajectories(pool, *mvdp);
        std::istringstream prefs(read_file(out / "data" / ("prefs_" + label + ".jsonl")));
        ds.records = read_records(prefs);
        ds.validate();
    } catch (const MissingArtifact&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError("cannot load dataset for value " + label + ": " + e.what());
    }
    return ds;
}

fs::path model_path(const fs::path& out, std::size_t rep, const std::string& label) {
    return out / "grounding" / rep_dir(rep) / ("model_" + label + ".json");
}

// Learned reward tables of one repetition.
std::vector<RewardTable> load_learned_tables(const fs::path& out, const Mvdp& mvdp, std::size_t rep) {
    std::vector<RewardTable> tables;
    for (std::size_t v = 0; v < mvdp.n_values(); ++v) {
        const auto path = model_path(out, rep, mvdp.values().label(v));
        const auto text = read_file(path);
        try {
            tables.push_back(materialize_rewards(model_from_json(text), mvdp));
        } catch (const std::exception& e) {
            throw IoError("cannot load " + path.string() + ": " + e.what());
        }
    }
    return tables;
}

std::vector<std::string> labels_of(const Mvdp& mvdp) { return mvdp.values().labels(); }

}  // namespace

// ---------------------------------------------------------------- gen-data

std::vector<DatasetStats> run_gen_data(const Settings& s, const fs::path& out) {
    const auto env = build_environment(s);
    const auto& mvdp = env.mvdp;
    const std::string cmd = "gen-data";
    write_artifact(out / "data" / "mvdp.json", mvdp_to_json(*mvdp), s, cmd);
    if (env.graph) {
        std::ostringstream net, feats;
        roadworld::save_graph(net, *env.graph);
        roadworld::dump_features_csv(feats, *env.graph, roadworld::RoadCostTable::defaults(), s.horizon);
        write_artifact(out / "data" / "network.txt", net.str(), s, cmd);
        write_artifact(out / "data" / "features.csv", feats.str(), s, cmd);
    } else {
        std::ostringstream table;
        firefighters::dump_csv(table);
        write_artifact(out / "data" / "environment.csv", table.str(), s, cmd);
    }

    const std::size_t m = mvdp->n_values();
    std::vector<DatasetStats> stats(m);
    parallel_for(m, [&](std::size_t v) {
        const auto ds = generate_dataset(mvdp, v, s.pool_size, s.n_comparisons, s.greedy_p, seed_for(s, "gen-data", v));
        const auto label = mvdp->values().label(v);
        std::ostringstream pool, prefs;
        write_trajectories(pool, ds.pool);
        write_records(prefs, ds.records);
        write_artifact(out / "data" / ("pool_" + label + ".jsonl"), pool.str(), s, cmd);
        write_artifact(out / "data" / ("prefs_" + label + ".jsonl"), prefs.str(), s, cmd);
        const auto conn = check_chain_connectivity(ds);
        stats[v] = {label, ds.pool.size(), ds.records.size(), conn.connected, conn.components};
    });

    json j{{"meta", meta(s, cmd)}, {"datasets", json::array()}};
    if (env.graph) j["destination_edge"] = env.destination_edge;
    for (const auto& st : stats)
        j["datasets"].push_back({{"value", st.value},
                                 {"pool", st.pool},
                                 {"comparisons", st.records},
                                 {"connected", st.connected},
                                 {"components", st.components}});
    write_file(out / "data" / "datasets.json", j.dump(2) + "\n");
    return stats;
}

// ---------------------------------------------------------------- train-grounding

std::vector<GroundingRunStats> run_train_grounding(const Settings& s, const fs::path& out) {
    const auto mvdp = load_mvdp(out);
    const std::size_t m = mvdp->n_values();
    std::vector<PreferenceDataset> datasets;
    for (std::size_t v = 0; v < m; ++v) datasets.push_back(load_dataset(out, mvdp, v));

    const std::string cmd = "train-grounding";
    std::vector<GroundingRunStats> stats(s.reps * m);
    parallel_for(s.reps * m, [&](std::size_t task) {
        const std::size_t rep = task / m, v = task % m;
        const auto label = mvdp->values().label(v);
        const std::uint64_t init_seed = seed_for(s, "grounding.init", rep, v);
        RewardModel model = s.model == ModelKind::Mlp ? RewardModel::mlp(mvdp->feature_dim(), s.mlp_hidden, init_seed)
                                                      : RewardModel::linear_softmax(mvdp->feature_dim(), init_seed);
        TrainConfig cfg = s.grounding;
        cfg.seed = seed_for(s, "grounding.batches", rep, v);
        const auto res = train_grounding(datasets[v], std::move(model), cfg);
        std::ostringstream loss;
        write_loss_csv(loss, res.loss_trace);
        write_artifact(model_path(out, rep, label), model_to_json(res.model), s, cmd);
        write_artifact(out / "grounding" / rep_dir(rep) / ("loss_" + label + ".csv"), loss.str(), s, cmd);
        stats[task] = {rep, label, res.initial_full_loss, res.final_full_loss};
    });

    json j{{"meta", meta(s, cmd)}, {"runs", json::array()}};
    for (const auto& st : stats)
        j["runs"].push_back({{"rep", st.rep},
                             {"value", st.value},
                             {"initial_loss", st.initial_loss},
                             {"final_loss", st.final_loss}});
    write_file(out / "grounding" / "summary.json", j.dump(2) + "\n");
    return stats;
}

// ---------------------------------------------------------------- train-vsi

namespace {

Policy agent_policy(const Mvdp& mvdp, std::span<const RewardTable> tables, const std::vector<double>& w,
                    std::size_t horizon) {
    return soft_value_iteration(mvdp, scalarize_rewards(tables, ValueSystemWeights::normalized(w)), horizon);
}

fs::path vsi_path(const fs::path& out, const std::string& grounding, std::size_t rep, std::size_t agent) {
    return out / "vsi" / grounding / rep_dir(rep) / ("agent" + std::to_string(agent) + ".json");
}

}  // namespace

std::vector<VsiRunStats> run_train_vsi(const Settings& s, const fs::path& out) {
    const auto mvdp = load_mvdp(out);
    const std::size_t m = mvdp->n_values();
    for (const auto& w : s.agents)
        if (w.size() != m) throw ConfigError("agent weight vectors must have one entry per value");
    std::vector<std::string> groundings{"true"};
    std::vector<std::vector<RewardTable>> learned(s.reps);
    if (!s.use_true_grounding) {
        groundings.push_back("learned");
        for (std::size_t r = 0; r < s.reps; ++r) learned[r] = load_learned_tables(out, *mvdp, r);
    }
    const std::size_t n_agents = s.agents.size();
    std::vector<VisitationMatrix> policy_targets(n_agents);
    parallel_for(n_agents, [&](std::size_t k) {
        const auto pol = agent_policy(*mvdp, mvdp->reward_tables(), s.agents[k], s.horizon);
        policy_targets[k] = visitation_from_policy(*mvdp, pol, s.horizon);
    });

    const std::string cmd = "train-vsi";
    const std::size_t per_g = s.reps * n_agents;
    std::vector<VsiRunStats> stats(groundings.size() * per_g);
    parallel_for(stats.size(), [&](std::size_t task) {
        const std::size_t g = task / per_g, rep = (task % per_g) / n_agents, k = task % n_agents;
        const auto& tables = g == 0 ? mvdp->reward_tables() : learned[rep];
        VsiConfig cfg = s.vsi;
        cfg.seed = seed_for(s, "vsi", rep, k);
        VsiResult res;
        if (s.vsi_target_from_policy) {
            res = train_vsi(*mvdp, tables, policy_targets[k], cfg);
        } else {
            const auto pol = agent_policy(*mvdp, mvdp->reward_tables(), s.agents[k], s.horizon);
            const auto demos = sample_trajectories(*mvdp, pol, s.vsi_demos, s.horizon, seed_for(s, "vsi.demos", rep, k));
            res = identify_from_trajectories(*mvdp, tables, demos, cfg);
        }
        auto j = json::parse(vsi_result_to_json(res, cfg));
        j["agent"] = s.agents[k];
        j["grounding"] = groundings[g];
        j["meta"] = meta(s, cmd);
        std::ostringstream trace;
        write_tvc_csv(trace, res.tvc_trace);
        write_file(vsi_path(out, groundings[g], rep, k), j.dump(2) + "\n");
        write_artifact(out / "vsi" / groundings[g] / rep_dir(rep) / ("tvc_agent" + std::to_string(k) + ".csv"),
                       trace.str(), s, cmd);
        stats[task] = {groundings[g], rep, k, res.weights.values(), res.final_tvc};
    });
    return stats;
}

// ---------------------------------------------------------------- evaluate

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto mx = mean_std(x).mean, my = mean_std(y).mean;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return sxx == syy ? 1.0 : 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::string table_name(Environment env, const std::string& kind) {
    const bool ff = env == Environment::Firefighters;
    if (kind == "grounding") return ff ? "table2a" : "table2b";
    if (kind == "true") return ff ? "table3" : "table7";
    if (kind == "learned") return ff ? "table4" : "table5";
    if (kind == "preference") return ff ? "table6" : "table8";
    return ff ? "figure3" : "figure4";
}

void add_mean_std(std::vector<std::string>& row, const std::vector<double>& xs) {
    const auto ms = mean_std(xs);
    row.push_back(fmt_short(ms.mean));
    row.push_back(fmt_short(ms.std));
}

}  // namespace

Evaluation run_evaluate(const Settings& s, const fs::path& out) {
    const auto mvdp = load_mvdp(out);
    const std::size_t m = mvdp->n_values();
    const auto labels = labels_of(*mvdp);
    std::vector<std::vector<RewardTable>> learned(s.reps);
    for (std::size_t r = 0; r < s.reps; ++r) learned[r] = load_learned_tables(out, *mvdp, r);

    std::vector<std::string> groundings;
    for (const char* g : {"true", "learned"})
        if (fs::exists(vsi_path(out, g, 0, 0))) groundings.push_back(g);
    if (groundings.empty()) throw MissingArtifact("missing artifact " + vsi_path(out, "true", 0, 0).string());

    Evaluation ev;
    ev.values = labels;
    const std::string cmd = "evaluate";

    // Grounding equivalence per aggregator.
    const std::size_t n_agg = s.aggregators.size();
    ev.grounding_accuracy.resize(n_agg);
    for (std::size_t a = 0; a < n_agg; ++a) {
        ev.grounding_accuracy[a].aggregator = s.aggregators[a];
        ev.grounding_accuracy[a].accuracy.resize(s.reps);
        ev.grounding_accuracy[a].indifferent_fraction.resize(s.reps);
    }
    parallel_for(n_agg * s.reps, [&](std::size_t task) {
        const std::size_t a = task / s.reps, r = task % s.reps;
        const auto rep = grounding_equivalence_accuracy(*mvdp, learned[r], ValueSystemWeights::normalized(s.aggregators[a]),
                                                        s.eval_pairs, s.epsilon, s.greedy_p,
                                                        seed_for(s, "eval.grounding", a, r));
        ev.grounding_accuracy[a].accuracy[r] = rep.accuracy;
        ev.grounding_accuracy[a].indifferent_fraction[r] =
            static_cast<double>(rep.n_within_epsilon) / static_cast<double>(rep.n_pairs);
    });

    // Value system identification results.
    const std::size_t n_agents = s.agents.size();
    std::vector<Policy> original(n_agents);
    parallel_for(n_agents, [&](std::size_t k) {
        original[k] = agent_policy(*mvdp, mvdp->reward_tables(), s.agents[k], s.horizon);
    });
    std::vector<std::vector<std::vector<double>>> traces(groundings.size() * n_agents,
                                                         std::vector<std::vector<double>>(s.reps));
    ev.agents.resize(groundings.size() * n_agents);
    for (std::size_t g = 0; g < groundings.size(); ++g)
        for (std::size_t k = 0; k < n_agents; ++k) {
            auto& row = ev.agents[g * n_agents + k];
            row.grounding = groundings[g];
            row.agent = s.agents[k];
            row.learned_weights.resize(s.reps);
            row.final_tvc.resize(s.reps);
            row.original_alignment.resize(s.reps);
            row.learned_alignment.resize(s.reps);
            row.preference_accuracy.resize(s.reps);
        }
    parallel_for(ev.agents.size() * s.reps, [&](std::size_t task) {
        const std::size_t idx = task / s.reps, r = task % s.reps;
        const std::size_t g = idx / n_agents, k = idx % n_agents;
        auto& row = ev.agents[idx];
        const auto j = read_json(vsi_path(out, groundings[g], r, k));
        const auto w_hat = j.at("weights").get<std::vector<double>>();
        if (w_hat.size() != m) throw IoError("weight vector of the wrong size in " + vsi_path(out, groundings[g], r, k).string());
        traces[idx][r] = j.at("tvc_trace").get<std::vector<double>>();
        row.learned_weights[r] = w_hat;
        row.final_tvc[r] = j.at("final_tvc").get<double>();
        const auto& tables = groundings[g] == "true" ? mvdp->reward_tables() : learned[r];
        const auto learned_policy = agent_policy(*mvdp, tables, w_hat, s.horizon);
        row.original_alignment[r] = average_alignments(*mvdp, original[k], s.alignment_samples, s.horizon,
                                                       seed_for(s, "eval.original", k, r));
        row.learned_alignment[r] = average_alignments(*mvdp, learned_policy, s.alignment_samples, s.horizon,
                                                      seed_for(s, "eval.learned", g, k, r));
        const ValueSystem truth{ValueSystemWeights::normalized(s.agents[k]), mvdp->reward_tables()};
        const ValueSystem model{ValueSystemWeights::normalized(w_hat), tables};
        row.preference_accuracy[r] = preference_prediction_accuracy(*mvdp, truth, model, s.eval_pairs, s.epsilon,
                                                                    s.greedy_p, seed_for(s, "eval.preference", k, r)).accuracy;
    });

    // Reward scatter of repetition 0.
    std::ostringstream scatter;
    reward_scatter_export(scatter, *mvdp, learned[0]);
    for (std::size_t v = 0; v < m; ++v) {
        std::vector<double> x, y;
        for (std::size_t st = 0; st < mvdp->n_states(); ++st)
            for (std::size_t a = 0; a < mvdp->action_count(static_cast<StateId>(st)); ++a) {
                const auto c = mvdp->cell(static_cast<StateId>(st), static_cast<ActionId>(a));
                x.push_back(mvdp->reward_tables()[v][c]);
                y.push_back(learned[0][v][c]);
            }
        ev.reward_correlation.push_back(pearson(x, y));
    }

    // Tables.
    const fs::path tdir = out / "tables";
    {
        Csv csv;
        std::vector<std::string> head{"table"};
        for (const auto& l : labels) head.push_back("w_" + l);
        for (const char* h : {"accuracy_mean", "accuracy_std", "indifferent_fraction_mean", "pairs", "epsilon", "reps"})
            head.push_back(h);
        csv.row(head);
        const auto name = table_name(s.environment, "grounding");
        for (const auto& row : ev.grounding_accuracy) {
            std::vector<std::string> cells{name};
            for (double w : row.aggregator) cells.push_back(fmt_short(w));
            add_mean_std(cells, row.accuracy);
            cells.push_back(fmt_short(mean_std(row.indifferent_fraction).mean));
            cells.push_back(std::to_string(s.eval_pairs));
            cells.push_back(fmt_short(s.epsilon));
            cells.push_back(std::to_string(s.reps));
            csv.row(cells);
        }
        write_artifact(tdir / (name + ".csv"), csv.str(), s, cmd);
    }
    for (const auto& gname : groundings) {
        Csv csv;
        std::vector<std::string> head{"table", "grounding"};
        for (const auto& l : labels) head.push_back("w_" + l);
        for (const auto& l : labels) head.insert(head.end(), {"learned_w_" + l + "_mean", "learned_w_" + l + "_std"});
        for (const auto& l : labels)
            head.insert(head.end(), {"original_A_" + l + "_mean", "original_A_" + l + "_std", "learned_A_" + l + "_mean",
                                     "learned_A_" + l + "_std"});
        head.insert(head.end(), {"final_tvc_mean", "final_tvc_std"});
        csv.row(head);
        const auto name = table_name(s.environment, gname);
        for (const auto& row : ev.agents) {
            if (row.grounding != gname) continue;
            std::vector<std::string> cells{name, gname};
            for (double w : row.agent) cells.push_back(fmt_short(w));
            for (std::size_t v = 0; v < m; ++v) {
                std::vector<double> xs;
                for (const auto& w : row.learned_weights) xs.push_back(w[v]);
                add_mean_std(cells, xs);
            }
            for (std::size_t v = 0; v < m; ++v) {
                // Mean over repetitions of the per-repetition mean; std is the mean sample std.
                std::vector<double> om, os, lm, ls;
                for (std::size_t r = 0; r < s.reps; ++r) {
                    om.push_back(row.original_alignment[r][v].mean);
                    os.push_back(row.original_alignment[r][v].std);
                    lm.push_back(row.learned_alignment[r][v].mean);
                    ls.push_back(row.learned_alignment[r][v].std);
                }
                cells.insert(cells.end(), {fmt_short(mean_std(om).mean), fmt_short(mean_std(os).mean),
                                           fmt_short(mean_std(lm).mean), fmt_short(mean_std(ls).mean)});
            }
            cells.push_back(fmt(mean_std(row.final_tvc).mean));
            cells.push_back(fmt(mean_std(row.final_tvc).std));
            csv.row(cells);
        }
        write_artifact(tdir / (name + ".csv"), csv.str(), s, cmd);
    }
    {
        Csv csv;
        std::vector<std::string> head{"table", "grounding"};
        for (const auto& l : labels) head.push_back("w_" + l);
        head.insert(head.end(), {"accuracy_mean", "accuracy_std", "pairs", "epsilon", "reps"});
        csv.row(head);
        const auto name = table_name(s.environment, "preference");
        for (const auto& row : ev.agents) {
            std::vector<std::string> cells{name, row.grounding};
            for (double w : row.agent) cells.push_back(fmt_short(w));
            add_mean_std(cells, row.preference_accuracy);
            cells.insert(cells.end(), {std::to_string(s.eval_pairs), fmt_short(s.epsilon), std::to_string(s.reps)});
            csv.row(cells);
        }
        write_artifact(tdir / (name + ".csv"), csv.str(), s, cmd);
    }
    {
        Csv csv;
        csv.row({"figure", "grounding", "agent", "iteration", "tvc_mean", "tvc_std"});
        const auto name = table_name(s.environment, "tvc");
        for (std::size_t idx = 0; idx < ev.agents.size(); ++idx) {
            const auto& t = traces[idx];
            const std::size_t len = t[0].size();
            for (std::size_t it = 0; it < len; ++it) {
                std::vector<double> xs;
                for (const auto& tr : t)
                    if (it < tr.size()) xs.push_back(tr[it]);
                const auto ms = mean_std(xs);
                csv.row({name, ev.agents[idx].grounding, std::to_string(idx % n_agents), std::to_string(it), fmt(ms.mean),
                         fmt(ms.std)});
            }
        }
        write_artifact(tdir / (name + ".csv"), csv.str(), s, cmd);
    }
    write_artifact(tdir / "figure2.csv", scatter.str(), s, cmd);

    json rep{{"meta", meta(s, cmd)}, {"values", labels}, {"reward_correlation", ev.reward_correlation}};
    rep["grounding_accuracy"] = json::array();
    for (const auto& row : ev.grounding_accuracy)
        rep["grounding_accuracy"].push_back({{"aggregator", row.aggregator}, {"accuracy", row.accuracy}});
    rep["agents"] = json::array();
    for (const auto& row : ev.agents)
        rep["agents"].push_back({{"grounding", row.grounding},
                                 {"agent", row.agent},
                                 {"learned_weights", row.learned_weights},
                                 {"final_tvc", row.final_tvc},
                                 {"preference_accuracy", row.preference_accuracy}});
    write_file(out / "report.json", rep.dump(2) + "\n");
    return ev;
}

// ---------------------------------------------------------------- verify-props

bool PropsReport::all_hold() const { return failures().empty(); }

std::vector<std::string> PropsReport::failures() const {
    std::vector<std::string> f;
    if (!prop1.certificate.holds || !prop1.converged) f.push_back("prop1_offset");
    for (const auto& p : prop2)
        if (!p.certificate.holds) f.push_back("prop2_equivalence(b=" + fmt(p.b) + ")");
    for (const auto& p : prop3)
        if (!p.holds) f.push_back("prop3_recovery(p=" + std::to_string(p.p) + ")");
    return f;
}

PropsReport run_verify_props(const Settings& s, const fs::path& out) {
    const auto& ps = s.props;
    PropsReport rep;
    rep.prop1 = prop1_toy_experiment(ps.prop1_trajectories, ps.prop1_features, ps.prop1_tol,
                                     seed_for(s, "props.prop1", 0), ps.train, ps.prop1_inject_offset);

    Rng rng(seed_for(s, "props.prop2", 0));
    std::vector<std::vector<double>> thetas(2, std::vector<double>(3));
    for (auto& t : thetas)
        for (auto& x : t) x = rng.uniform(-1.0, 1.0);
    const auto toy = make_linear_toy(6, 3, thetas, 5, seed_for(s, "props.prop2", 1));
    for (double b : ps.prop2_b) {
        PropsReport::Prop2 p2;
        p2.b = b;
        p2.k = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        p2.certificate = prop2_equivalence_certificate(toy, b, p2.k, ps.prop2_aggregators, ps.prop2_pairs,
                                                       seed_for(s, "props.prop2", 2));
        rep.prop2.push_back(std::move(p2));
    }

    rep.prop3.resize(ps.prop3_p.size());
    parallel_for(ps.prop3_p.size(), [&](std::size_t i) {
        auto& p3 = rep.prop3[i];
        p3.p = static_cast<std::size_t>(ps.prop3_p[i]);
        p3.report = prop3_recovery_experiment(p3.p, seed_for(s, "props.prop3", p3.p), ps.train);
        p3.holds = p3.report.rank_ok && p3.report.recovery_error < ps.prop3_tol && p3.report.trained_vs_oracle < ps.prop3_tol;
    });

    json j{{"meta", meta(s, "verify-props")}};
    j["prop1_offset"] = {{"holds", rep.prop1.certificate.holds && rep.prop1.converged},
                         {"spread", rep.prop1.certificate.spread},
                         {"offset", rep.prop1.certificate.offset},
                         {"tolerance", ps.prop1_tol},
                         {"final_loss", rep.prop1.final_loss},
                         {"entropy_floor", rep.prop1.entropy_floor},
                         {"converged", rep.prop1.converged}};
    j["prop2_equivalence"] = json::array();
    for (const auto& p : rep.prop2) {
        json e{{"holds", p.certificate.holds}, {"b", p.b}, {"K", p.k}, {"checked", p.certificate.n_checked}};
        if (p.certificate.counterexample)
            e["counterexample"] = {{"aggregator", p.certificate.counterexample->first},
                                   {"pair", p.certificate.counterexample->second}};
        j["prop2_equivalence"].push_back(e);
    }
    j["prop3_recovery"] = json::array();
    for (const auto& p : rep.prop3)
        j["prop3_recovery"].push_back({{"holds", p.holds},
                                       {"p", p.p},
                                       {"rank_ok", p.report.rank_ok},
                                       {"recovery_error", p.report.recovery_error},
                                       {"oracle_error", p.report.oracle_error},
                                       {"trained_vs_oracle", p.report.trained_vs_oracle},
                                       {"tolerance", ps.prop3_tol}});
    j["all_hold"] = rep.all_hold();
    j["failures"] = rep.failures();
    write_file(out / "props" / "report.json", j.dump(2) + "\n");
    return rep;
}

}  // namespace vslkit::experiment

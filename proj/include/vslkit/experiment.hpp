#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vslkit/config.hpp"
#include "vslkit/eval.hpp"
#include "vslkit/learn_grounding.hpp"
#include "vslkit/learn_vsi.hpp"
#include "vslkit/props.hpp"
#include "vslkit/roadworld.hpp"

namespace vslkit::experiment {

inline constexpr const char* kVersion = "0.1.0";

/// I/O failure while reading or writing run files (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A required artifact from an earlier pipeline stage is absent (CLI exit code 5).
class MissingArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Environment { None, Firefighters, Roadworld };

struct PropSettings {
    std::size_t prop1_trajectories = 20;
    std::size_t prop1_features = 4;
    double prop1_tol = 1e-3;
    /// Added to one trajectory's learned reward; non-zero values must break the certificate.
    double prop1_inject_offset = 0.0;
    std::size_t prop2_aggregators = 100;
    std::size_t prop2_pairs = 1000;
    std::vector<double> prop2_b{0.5, 2.5};
    std::vector<double> prop3_p{1, 3, 5};
    double prop3_tol = 1e-3;
    TrainConfig train{0, 20.0, 100000, 0, false};
};

struct Settings {
    Environment environment = Environment::None;
    std::size_t horizon = 50;
    std::uint64_t seed = 0;
    std::size_t reps = 1;

    std::size_t pool_size = 0;
    std::size_t n_comparisons = 0;
    double greedy_p = 0.8;

    ModelKind model = ModelKind::Mlp;
    std::vector<std::size_t> mlp_hidden = kDefaultMlpHidden;
    TrainConfig grounding;

    VsiConfig vsi;
    bool vsi_target_from_policy = true;
    std::size_t vsi_demos = 1000;
    bool use_true_grounding = false;
    std::vector<std::vector<double>> agents;
    std::vector<std::vector<double>> aggregators;

    std::size_t eval_pairs = 1000;
    double epsilon = 0.04;
    std::size_t alignment_samples = 1000;

    std::size_t network_nodes = 357;
    std::uint64_t network_seed = 7;
    std::string network_file;
    /// "auto" or an edge id.
    std::string destination = "auto";

    PropSettings props;
    std::string config_hash;
};

/// Throws ConfigError on unknown keys or malformed values.
Settings load_settings(const Config& config);

struct EnvironmentInstance {
    std::shared_ptr<const Mvdp> mvdp;
    std::optional<roadworld::RoadGraph> graph;
    std::int64_t destination_edge = -1;
};

/// Throws ConfigError when the settings name no environment.
EnvironmentInstance build_environment(const Settings& settings);

struct DatasetStats {
    std::string value;
    std::size_t pool = 0;
    std::size_t records = 0;
    bool connected = false;
    std::size_t components = 0;
};

std::vector<DatasetStats> run_gen_data(const Settings& settings, const std::filesystem::path& out);

struct GroundingRunStats {
    std::size_t rep = 0;
    std::string value;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Throws DivergenceError (exit 4) or MissingArtifact.
std::vector<GroundingRunStats> run_train_grounding(const Settings& settings, const std::filesystem::path& out);

struct VsiRunStats {
    std::string grounding;  // "true" or "learned"
    std::size_t rep = 0;
    std::size_t agent = 0;
    std::vector<double> weights;
    double final_tvc = 0.0;
};

std::vector<VsiRunStats> run_train_vsi(const Settings& settings, const std::filesystem::path& out);

struct GroundingAccuracyRow {
    std::vector<double> aggregator;
    std::vector<double> accuracy;             // per rep
    std::vector<double> indifferent_fraction; // per rep
};

struct AgentRow {
    std::string grounding;
    std::vector<double> agent;
    std::vector<std::vector<double>> learned_weights;  // per rep
    std::vector<double> final_tvc;                     // per rep
    std::vector<std::vector<MeanStd>> original_alignment;  // per rep, per value
    std::vector<std::vector<MeanStd>> learned_alignment;   // per rep, per value
    std::vector<double> preference_accuracy;               // per rep
};

struct Evaluation {
    std::vector<std::string> values;
    std::vector<GroundingAccuracyRow> grounding_accuracy;
    std::vector<AgentRow> agents;
    /// Pearson correlation of learned vs true rewards per value (rep 0, available cells).
    std::vector<double> reward_correlation;
};

Evaluation run_evaluate(const Settings& settings, const std::filesystem::path& out);

struct PropsReport {
    Prop1Experiment prop1;
    struct Prop2 {
        double b = 0.0;
        std::vector<double> k;
        EquivalenceCertificate certificate;
    };
    std::vector<Prop2> prop2;
    struct Prop3 {
        std::size_t p = 0;
        RecoveryReport report;
        bool holds = false;
    };
    std::vector<Prop3> prop3;

    bool all_hold() const;
    /// Names of failing certificates.
    std::vector<std::string> failures() const;
};

PropsReport run_verify_props(const Settings& settings, const std::filesystem::path& out);

}  // namespace vslkit::experiment

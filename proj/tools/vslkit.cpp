#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vslkit/experiment.hpp"

namespace ex = vslkit::experiment;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kDivergence = 4, kMissing = 5, kCertificate = 6 };

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    bool use_true_grounding = false;
};

ex::Settings settings_from(const Options& opt) {
    auto cfg = vslkit::Config::load(opt.config);
    if (opt.seed) cfg.set("seed", std::to_string(*opt.seed));
    if (opt.reps) cfg.set("reps", std::to_string(*opt.reps));
    if (opt.use_true_grounding) cfg.set("use_true_grounding", "true");
    return ex::load_settings(cfg);
}

int gen_data(const Options& opt) {
    const auto s = settings_from(opt);
    for (const auto& d : ex::run_gen_data(s, opt.out))
        std::printf("%-4s pool=%zu comparisons=%zu connected=%s components=%zu\n", d.value.c_str(), d.pool, d.records,
                    d.connected ? "yes" : "no", d.components);
    return kOk;
}

int train_grounding(const Options& opt) {
    const auto s = settings_from(opt);
    for (const auto& r : ex::run_train_grounding(s, opt.out))
        std::printf("rep %zu %-4s loss %.6f -> %.6f\n", r.rep, r.value.c_str(), r.initial_loss, r.final_loss);
    return kOk;
}

int train_vsi(const Options& opt) {
    const auto s = settings_from(opt);
    for (const auto& r : ex::run_train_vsi(s, opt.out)) {
        std::printf("%-7s rep %zu agent %zu weights (", r.grounding.c_str(), r.rep, r.agent);
        for (std::size_t i = 0; i < r.weights.size(); ++i) std::printf(i ? ", %.4f" : "%.4f", r.weights[i]);
        std::printf(") tvc %.3g\n", r.final_tvc);
    }
    return kOk;
}

int evaluate(const Options& opt) {
    const auto s = settings_from(opt);
    const auto ev = ex::run_evaluate(s, opt.out);
    double worst = 1.0;
    for (const auto& row : ev.grounding_accuracy)
        for (double a : row.accuracy) worst = std::min(worst, a);
    std::printf("grounding equivalence accuracy: min %.4f over %zu aggregators %s\n", worst,
                ev.grounding_accuracy.size(), worst >= 0.99 ? "[PASS >= 0.99]" : "[below 0.99]");
    for (std::size_t v = 0; v < ev.values.size(); ++v)
        std::printf("reward correlation %-4s %.4f\n", ev.values[v].c_str(), ev.reward_correlation[v]);
    for (const auto& row : ev.agents) {
        double tvc = 0.0, acc = 0.0;
        for (double t : row.final_tvc) tvc += t / row.final_tvc.size();
        for (double a : row.preference_accuracy) acc += a / row.preference_accuracy.size();
        std::printf("%-7s agent (", row.grounding.c_str());
        for (std::size_t i = 0; i < row.agent.size(); ++i) std::printf(i ? ", %.2f" : "%.2f", row.agent[i]);
        std::printf(") tvc %.3g preference accuracy %.4f\n", tvc, acc);
    }
    std::printf("tables written to %s\n", (std::filesystem::path(opt.out) / "tables").string().c_str());
    return kOk;
}

int verify_props(const Options& opt) {
    const auto s = settings_from(opt);
    const auto rep = ex::run_verify_props(s, opt.out);
    std::printf("prop1_offset        %s spread %.3g loss gap %.3g\n",
                rep.prop1.certificate.holds && rep.prop1.converged ? "PASS" : "FAIL", rep.prop1.certificate.spread,
                rep.prop1.final_loss - rep.prop1.entropy_floor);
    for (const auto& p : rep.prop2)
        std::printf("prop2_equivalence   %s b=%g checked %zu\n", p.certificate.holds ? "PASS" : "FAIL", p.b,
                    p.certificate.n_checked);
    for (const auto& p : rep.prop3)
        std::printf("prop3_recovery      %s p=%zu error %.3g\n", p.holds ? "PASS" : "FAIL", p.p, p.report.recovery_error);
    for (const auto& f : rep.failures()) std::fprintf(stderr, "certificate failed: %s\n", f.c_str());
    return rep.all_hold() ? kOk : kCertificate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Value system learning experiments"};
    app.set_version_flag("--version", ex::kVersion);
    app.require_subcommand(1);
    Options opt;
    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Options&);
    };
    const Command commands[] = {
        {"gen-data", "Generate trajectory pools and preference datasets", gen_data},
        {"train-grounding", "Learn value grounding models", train_grounding},
        {"train-vsi", "Identify agent value systems", train_vsi},
        {"evaluate", "Write result tables", evaluate},
        {"verify-props", "Run the certificate checks on toy instances", verify_props},
    };
    int (*selected)(const Options&) = nullptr;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", opt.config, "Config file")->required();
        sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", opt.seed, "Override the config seed");
        sub->add_option("--reps", opt.reps, "Override the number of repetitions")->check(CLI::PositiveNumber);
        sub->add_flag("--use-true-grounding", opt.use_true_grounding, "Skip learned groundings in train-vsi");
        sub->callback([&selected, run = c.run] { selected = run; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        return selected(opt);
    } catch (const vslkit::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const ex::IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const ex::MissingArtifact& e) {
        std::fprintf(stderr, "%s (run the earlier pipeline stages first)\n", e.what());
        return kMissing;
    } catch (const vslkit::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return kDivergence;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return kDivergence;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
}

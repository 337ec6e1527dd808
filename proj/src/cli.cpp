#include "fedsurv/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsurv/errors.hpp"
#include "fedsurv/experiment.hpp"

namespace fedsurv {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

struct CommonOpts {
    std::string config_file;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::string out;
    std::optional<std::size_t> repeats;
    bool dump_messages = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "JSON experiment config file");
    cmd->add_option("--preset", opts.preset,
                    "named configuration (cc25-desk, cc50-desk, cc75-desk, "
                    "cc25-full, cc50-full, cc75-full)");
    cmd->add_option("--seed", opts.seed, "root seed override");
    cmd->add_option("--out", opts.out, "output directory override");
}

// Precedence: flag > config file / preset > default.
ExperimentConfig resolve_config(const CommonOpts& opts) {
    if (!opts.preset.empty() && !opts.config_file.empty()) {
        throw DomainError("--preset and --config are mutually exclusive");
    }
    ExperimentConfig cfg;
    if (!opts.preset.empty()) {
        cfg = preset_config(opts.preset);
    } else if (!opts.config_file.empty()) {
        cfg = config_from_json_file(opts.config_file);
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (!opts.mode.empty()) cfg.mode = run_mode_from_string(opts.mode);
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    if (opts.repeats) cfg.repeats = *opts.repeats;
    cfg.dump_messages = cfg.dump_messages || opts.dump_messages;
    return cfg;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Federated survival analysis: jackknife pseudo-value "
                 "derivation and pseudo-value regression training"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    std::vector<double> censor_probs{0.25, 0.50, 0.75};
    CLI::App* gen = app.add_subcommand(
        "generate", "Write synthetic survival datasets as CSV");
    add_common(gen, gen_opts);
    gen->add_option("--censor-prob", censor_probs,
                    "case-censoring probabilities for the censored variants");

    CommonOpts run_opts;
    CLI::App* run = app.add_subcommand(
        "run", "Train and evaluate one experiment configuration");
    add_common(run, run_opts);
    run->add_option("--mode", run_opts.mode, "centralized or federated");
    run->add_option("--repeats", run_opts.repeats, "number of seeded repetitions");
    run->add_flag("--dump-messages", run_opts.dump_messages,
                  "write the federated message trace per seed");

    CommonOpts eval_opts;
    std::string checkpoint;
    CLI::App* eval = app.add_subcommand(
        "evaluate", "Recompute test metrics for a saved checkpoint");
    add_common(eval, eval_opts);
    eval->add_option("--checkpoint", checkpoint, "checkpoint JSON file")->required();

    std::vector<std::string> shards;
    std::string duration_column = "duration";
    std::string event_column = "event";
    std::size_t grid_points = 8;
    std::string pseudo_out = "pseudo_out";
    bool pseudo_dump = false;
    CLI::App* pseudo = app.add_subcommand(
        "pseudo", "Derive pseudo values over per-client CSV shards");
    pseudo->add_option("--shard", shards, "client shard CSV (repeatable)")
        ->required();
    pseudo->add_option("--duration-column", duration_column, "duration column name");
    pseudo->add_option("--event-column", event_column, "event column name");
    pseudo->add_option("--grid-points", grid_points, "number of grid points");
    pseudo->add_option("--out", pseudo_out, "output directory");
    pseudo->add_flag("--dump-messages", pseudo_dump, "write the message trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            ExperimentConfig cfg = resolve_config(gen_opts);
            SynthConfig synth = cfg.dataset.synth;
            if (cfg.dataset.kind != DatasetSpec::Kind::kSynthetic) {
                throw DomainError("generate needs a synthetic dataset spec");
            }
            if (gen_opts.seed) synth.seed = *gen_opts.seed;
            const std::string out =
                !gen_opts.out.empty() ? gen_opts.out : cfg.out_dir;
            cmd_generate(synth, censor_probs, out);
            std::cout << "wrote datasets to " << out << "\n";
            return kExitOk;
        }
        if (run->parsed()) {
            const ExperimentConfig cfg = resolve_config(run_opts);
            const RunOutput output = cmd_run(cfg);
            std::cout << "dataset=" << cfg.dataset.name
                      << " mode=" << to_string(cfg.mode)
                      << " cindex=" << output.summary.cindex_mean << " ("
                      << output.summary.cindex_std << ")"
                      << " ibrier=" << output.summary.ibrier_mean << " ("
                      << output.summary.ibrier_std << ")\n"
                      << "results under " << cfg.out_dir << "\n";
            return kExitOk;
        }
        if (eval->parsed()) {
            const ExperimentConfig cfg = resolve_config(eval_opts);
            const ResultRow row =
                cmd_evaluate(checkpoint, cfg.dataset, eval_opts.seed);
            std::cout << "dataset=" << row.dataset << " mode=" << row.mode
                      << " seed=" << row.seed << " cindex=" << row.cindex
                      << " ibrier=" << row.ibrier << "\n";
            return kExitOk;
        }
        if (pseudo->parsed()) {
            std::vector<std::filesystem::path> paths(shards.begin(), shards.end());
            cmd_pseudo(paths, duration_column, event_column, grid_points,
                       pseudo_out, pseudo_dump);
            std::cout << "wrote pseudo values to " << pseudo_out << "\n";
            return kExitOk;
        }
        return kExitUsage;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

} // namespace fedsurv

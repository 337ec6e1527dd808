#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedsurv/datagen.hpp"
#include "fedsurv/federation.hpp"
#include "fedsurv/model.hpp"

namespace fedsurv {

struct DatasetSpec {
    enum class Kind { kSynthetic, kCsv };
    Kind kind = Kind::kSynthetic;
    std::string name = "synthetic";
    SynthConfig synth;
    std::string csv_path;
    std::string duration_column = "duration";
    std::string event_column = "event";
};

enum class RunMode { kCentralized, kFederated };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& text);

struct ExperimentConfig {
    DatasetSpec dataset;
    FederationConfig federation;
    TrainConfig model;
    std::vector<std::size_t> hidden_dims = {128, 64, 64, 32, 32};
    RunMode mode = RunMode::kFederated;
    std::size_t repeats = 5;
    std::uint64_t seed = 1729;
    std::string out_dir = "out";
    bool dump_messages = false;

    void validate() const;
};

struct ResultRow {
    std::string dataset;
    std::string mode;
    std::uint64_t seed = 0;
    double cindex = 0.0;
    double ibrier = 0.0;
    double wall_time_s = 0.0;
    std::uint64_t rounds = 0;
    std::uint64_t epochs = 0;
};

struct SeedOutcome {
    ResultRow row;
    ModelParams params;
    TimeGrid grid;
    std::vector<RoundLog> round_logs;          // federated runs
    std::vector<EpochStats> central_history;   // centralized runs
    MessageTrace trace;                        // populated when dumping
};

struct RunSummary {
    double cindex_mean = 0.0;
    double cindex_std = 0.0;
    double ibrier_mean = 0.0;
    double ibrier_std = 0.0;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    RunSummary summary;
};

// One fully deterministic experiment repetition.
SeedOutcome run_single_seed(const ExperimentConfig& config, std::uint64_t seed);

// Runs every repeat, writes rows, summary, checkpoints, logs and optional
// message traces under config.out_dir.
RunOutput cmd_run(const ExperimentConfig& config);

// Writes the complete-follow-up dataset plus one case-censored variant per
// probability, with a manifest describing the generation.
void cmd_generate(const SynthConfig& config, std::vector<double> censor_probs,
                  const std::filesystem::path& out_dir);

// Re-evaluates a checkpoint on the dataset's deterministic test split.
ResultRow cmd_evaluate(const std::filesystem::path& checkpoint_path,
                       const DatasetSpec& dataset,
                       std::optional<std::uint64_t> seed_override);

// Standalone pseudo-value derivation over per-client CSV shards.
void cmd_pseudo(const std::vector<std::filesystem::path>& shard_paths,
                const std::string& duration_column, const std::string& event_column,
                std::size_t grid_points, const std::filesystem::path& out_dir,
                bool dump_messages);

// Named experiment configurations (cc25-desk, cc50-desk, cc75-desk and the
// full-size cc25-full, cc50-full, cc75-full).
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

ExperimentConfig config_from_json_file(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

// Checkpoint serialization (grid + params + run identity).
struct Checkpoint {
    std::string dataset;
    std::string mode;
    std::uint64_t seed = 0;
    std::uint64_t rounds = 0;
    std::uint64_t epochs = 0;
    TimeGrid grid;
    ModelParams params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Deterministic 80/20 split of the dataset rows keyed by the run seed.
struct TrainTestSplit {
    std::vector<SurvivalRecord> train;
    std::vector<SurvivalRecord> test;
};
TrainTestSplit train_test_split(std::span<const SurvivalRecord> records,
                                std::uint64_t seed);

// Materializes the dataset for one repetition (synthetic data is seeded by
// the repetition seed; CSV data loads as-is).
std::vector<SurvivalRecord> materialize_dataset(const DatasetSpec& dataset,
                                                std::uint64_t seed);

} // namespace fedsurv

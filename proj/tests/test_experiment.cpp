#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedsurv/cli.hpp"
#include "fedsurv/errors.hpp"
#include "fedsurv/experiment.hpp"
#include "fedsurv/io_util.hpp"
#include "fedsurv/messages.hpp"
#include "test_util.hpp"

using namespace fedsurv;
using namespace fedsurv::testutil;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

ExperimentConfig tiny_config(const std::string& out, RunMode mode) {
    ExperimentConfig cfg;
    cfg.dataset.name = "tiny";
    cfg.dataset.synth.n = 160;
    cfg.dataset.synth.p = 4;
    cfg.dataset.synth.censor_prob = 0.25;
    cfg.federation.num_clients = 3;
    cfg.federation.participation_fraction = 1.0;
    cfg.federation.rounds = 2;
    cfg.federation.grid_points = 4;
    cfg.federation.local_train.max_epochs = 2;
    cfg.federation.local_train.batch_size = 16;
    cfg.model.max_epochs = 3;
    cfg.model.batch_size = 16;
    cfg.hidden_dims = {8, 4};
    cfg.mode = mode;
    cfg.repeats = 2;
    cfg.seed = 5000;
    cfg.out_dir = out;
    return cfg;
}

} // namespace

TEST_CASE("presets resolve and validate") {
    for (const auto& name : preset_names()) {
        const ExperimentConfig cfg = preset_config(name);
        CHECK_NOTHROW(cfg.validate());
        CHECK(cfg.dataset.name == name);
    }
    CHECK(preset_config("cc25-desk").dataset.synth.censor_prob == 0.25);
    CHECK(preset_config("cc75-desk").dataset.synth.censor_prob == 0.75);
    CHECK(preset_config("cc50-full").federation.num_clients == 10);
    CHECK(preset_config("cc50-full").federation.rounds == 50);
    CHECK_THROWS_AS((void)preset_config("cc99-desk"), DomainError);
}

TEST_CASE("config json round trip") {
    ExperimentConfig cfg = preset_config("cc50-desk");
    cfg.mode = RunMode::kCentralized;
    cfg.seed = 77;
    const auto path = fresh_dir("fedsurv_cfg") / "config.json";
    atomic_write_file(path, config_to_json(cfg));
    const ExperimentConfig back = config_from_json_file(path);
    CHECK(back.dataset.name == cfg.dataset.name);
    CHECK(back.dataset.synth.n == cfg.dataset.synth.n);
    CHECK(back.dataset.synth.censor_prob == cfg.dataset.synth.censor_prob);
    CHECK(back.federation.num_clients == cfg.federation.num_clients);
    CHECK(back.federation.local_train.max_epochs ==
          cfg.federation.local_train.max_epochs);
    CHECK(back.model.max_epochs == cfg.model.max_epochs);
    CHECK(back.hidden_dims == cfg.hidden_dims);
    CHECK(back.mode == cfg.mode);
    CHECK(back.seed == 77);
}

TEST_CASE("run_single_seed produces a sane federated row") {
    const auto dir = fresh_dir("fedsurv_single");
    const ExperimentConfig cfg = tiny_config(dir.string(), RunMode::kFederated);
    const SeedOutcome outcome = run_single_seed(cfg, cfg.seed);
    CHECK(outcome.row.cindex >= 0.0);
    CHECK(outcome.row.cindex <= 1.0);
    CHECK(outcome.row.ibrier >= 0.0);
    CHECK(outcome.row.rounds == 2);
    CHECK(outcome.row.epochs > 0);
    CHECK(outcome.row.mode == "federated");
    CHECK(outcome.grid.size() == 4);
    CHECK(outcome.round_logs.size() == 2);
}

TEST_CASE("cmd_run writes deterministic result rows") {
    const auto dir_a = fresh_dir("fedsurv_run_a");
    const auto dir_b = fresh_dir("fedsurv_run_b");
    ExperimentConfig cfg_a = tiny_config(dir_a.string(), RunMode::kFederated);
    ExperimentConfig cfg_b = tiny_config(dir_b.string(), RunMode::kFederated);
    const RunOutput out_a = cmd_run(cfg_a);
    const RunOutput out_b = cmd_run(cfg_b);
    CHECK(read_file(dir_a / "results.csv") == read_file(dir_b / "results.csv"));
    CHECK(out_a.rows.size() == 2);
    CHECK(out_a.summary.cindex_mean == out_b.summary.cindex_mean);
    CHECK(std::filesystem::exists(dir_a / "summary.csv"));
    CHECK(std::filesystem::exists(dir_a / "summary.txt"));
    CHECK(std::filesystem::exists(dir_a / "timings.csv"));
    CHECK(std::filesystem::exists(dir_a / "config.json"));
    CHECK(std::filesystem::exists(dir_a / "checkpoint_seed5000.json"));
    CHECK(std::filesystem::exists(dir_a / "rounds_seed5001.csv"));
}

TEST_CASE("repeats of one degenerate to the single row") {
    const auto dir = fresh_dir("fedsurv_run_one");
    ExperimentConfig cfg = tiny_config(dir.string(), RunMode::kCentralized);
    cfg.repeats = 1;
    const RunOutput out = cmd_run(cfg);
    REQUIRE(out.rows.size() == 1);
    CHECK(out.summary.cindex_mean == out.rows[0].cindex);
    CHECK(out.summary.cindex_std == 0.0);
    CHECK(out.summary.ibrier_mean == out.rows[0].ibrier);
    CHECK(out.summary.ibrier_std == 0.0);
    CHECK(std::filesystem::exists(dir / "history_seed5000.csv"));
}

TEST_CASE("evaluate reproduces the logged metrics exactly") {
    const auto dir = fresh_dir("fedsurv_eval");
    ExperimentConfig cfg = tiny_config(dir.string(), RunMode::kFederated);
    cfg.repeats = 1;
    const RunOutput out = cmd_run(cfg);
    const ResultRow again = cmd_evaluate(dir / "checkpoint_seed5000.json",
                                         cfg.dataset, std::nullopt);
    CHECK(again.cindex == out.rows[0].cindex);
    CHECK(again.ibrier == out.rows[0].ibrier);
    CHECK(again.seed == out.rows[0].seed);
}

TEST_CASE("evaluate rejects a covariate-count mismatch") {
    const auto dir = fresh_dir("fedsurv_eval_bad");
    ExperimentConfig cfg = tiny_config(dir.string(), RunMode::kCentralized);
    cfg.repeats = 1;
    (void)cmd_run(cfg);
    DatasetSpec wider = cfg.dataset;
    wider.synth.p = 7;
    CHECK_THROWS_AS(
        (void)cmd_evaluate(dir / "checkpoint_seed5000.json", wider, std::nullopt),
        DomainError);
}

TEST_CASE("an all-zero checkpoint scores one half") {
    const auto dir = fresh_dir("fedsurv_zero_ckpt");
    ExperimentConfig cfg = tiny_config(dir.string(), RunMode::kCentralized);
    Checkpoint ckpt;
    ckpt.dataset = cfg.dataset.name;
    ckpt.mode = "centralized";
    ckpt.seed = cfg.seed;
    ckpt.grid = TimeGrid({0.5, 1.0, 1.5, 2.0});
    ckpt.params = ModelParams::init({4, 8, 4, 4}, 1);
    for (auto& layer : ckpt.params.weights) {
        for (double& v : layer) v = 0.0;
    }
    const auto path = dir / "zero.json";
    save_checkpoint(path, ckpt);
    const ResultRow row = cmd_evaluate(path, cfg.dataset, cfg.seed);
    CHECK(row.cindex == 0.5);
}

TEST_CASE("a one-client federation matches the centralized mode bitwise") {
    const auto dir_fed = fresh_dir("fedsurv_degen_fed");
    const auto dir_cen = fresh_dir("fedsurv_degen_cen");
    ExperimentConfig fed = tiny_config(dir_fed.string(), RunMode::kFederated);
    fed.federation.num_clients = 1;
    fed.federation.participation_fraction = 1.0;
    fed.federation.rounds = 1;
    fed.federation.local_train = fed.model; // same schedule both paths
    fed.repeats = 1;
    ExperimentConfig cen = tiny_config(dir_cen.string(), RunMode::kCentralized);
    cen.federation = fed.federation;
    cen.repeats = 1;

    const RunOutput fed_out = cmd_run(fed);
    const RunOutput cen_out = cmd_run(cen);
    CHECK(fed_out.rows[0].cindex == cen_out.rows[0].cindex);
    CHECK(fed_out.rows[0].ibrier == cen_out.rows[0].ibrier);

    const Checkpoint fed_ckpt = load_checkpoint(dir_fed / "checkpoint_seed5000.json");
    const Checkpoint cen_ckpt = load_checkpoint(dir_cen / "checkpoint_seed5000.json");
    CHECK(fed_ckpt.params == cen_ckpt.params);
}

TEST_CASE("message dumps pass the audit") {
    const auto dir = fresh_dir("fedsurv_dump");
    ExperimentConfig cfg = tiny_config(dir.string(), RunMode::kFederated);
    cfg.repeats = 1;
    cfg.dump_messages = true;
    (void)cmd_run(cfg);
    const auto trace = dir / "messages_seed5000.jsonl";
    REQUIRE(std::filesystem::exists(trace));
    CHECK(audit_trace_file(trace).empty());
}

TEST_CASE("cmd_generate writes censored variants and a manifest") {
    const auto dir = fresh_dir("fedsurv_gen");
    SynthConfig cfg;
    cfg.n = 400;
    cfg.p = 3;
    cfg.seed = 99;
    cmd_generate(cfg, {0.25, 0.5}, dir);
    CHECK(std::filesystem::exists(dir / "uncensored.csv"));
    CHECK(std::filesystem::exists(dir / "cc25.csv"));
    CHECK(std::filesystem::exists(dir / "cc50.csv"));
    CHECK(std::filesystem::exists(dir / "manifest.json"));

    const auto uncensored = load_csv(dir / "uncensored.csv", "duration", "event");
    REQUIRE(uncensored.size() == 400);
    for (const auto& r : uncensored) CHECK(r.event);

    const auto cc25 = load_csv(dir / "cc25.csv", "duration", "event");
    std::size_t censored = 0;
    for (const auto& r : cc25) censored += r.event ? 0 : 1;
    CHECK(censored > 60);
    CHECK(censored < 140);

    // byte-identical regeneration
    const std::string first = read_file(dir / "cc25.csv");
    cmd_generate(cfg, {0.25, 0.5}, dir);
    CHECK(read_file(dir / "cc25.csv") == first);

    const auto dir_zero = fresh_dir("fedsurv_gen_zero");
    cmd_generate(cfg, {0.0}, dir_zero);
    const auto cc0 = load_csv(dir_zero / "cc0.csv", "duration", "event");
    for (const auto& r : cc0) CHECK(r.event);
}

TEST_CASE("cmd_pseudo reproduces the in-memory pipeline over csv shards") {
    const auto dir = fresh_dir("fedsurv_pseudo_cmd");
    auto gen = rng::make_stream(77, rng::Stream::kDataGen);
    const auto shard_a = random_records(gen, 30, 0.3);
    const auto shard_b = random_records(gen, 20, 0.3);
    std::vector<SurvivalRecord> shard_a_cov = shard_a, shard_b_cov = shard_b;
    for (auto& r : shard_a_cov) r.covariates = {0.0};
    for (auto& r : shard_b_cov) r.covariates = {0.0};
    write_csv(dir / "a.csv", shard_a_cov);
    write_csv(dir / "b.csv", shard_b_cov);

    cmd_pseudo({dir / "a.csv", dir / "b.csv"}, "duration", "event", 5, dir, true);
    REQUIRE(std::filesystem::exists(dir / "pseudo_shard0.csv"));
    REQUIRE(std::filesystem::exists(dir / "pseudo_shard1.csv"));
    REQUIRE(std::filesystem::exists(dir / "grid.csv"));
    REQUIRE(std::filesystem::exists(dir / "messages.jsonl"));
    CHECK(audit_trace_file(dir / "messages.jsonl").empty());

    // independent computation of the same pipeline
    double max_a = 0.0, max_b = 0.0;
    for (const auto& r : shard_a) max_a = std::max(max_a, r.time);
    for (const auto& r : shard_b) max_b = std::max(max_b, r.time);
    const TimeGrid grid =
        negotiate_time_grid(std::vector<double>{max_a, max_b}, 5);
    std::vector<SurvivalRecord> pooled = shard_a;
    pooled.insert(pooled.end(), shard_b.begin(), shard_b.end());
    const PartialMatrix global = build_partial_matrix(pooled, grid);
    const PseudoValueMatrix expect_a =
        pseudo_values(global, shard_a, pooled.size());

    const auto out_a = load_csv(dir / "pseudo_shard0.csv", "duration", "event");
    REQUIRE(out_a.size() == shard_a.size());
    for (std::size_t i = 0; i < out_a.size(); ++i) {
        REQUIRE(out_a[i].covariates.size() == grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            CHECK(out_a[i].covariates[j] == expect_a.values.at(i, j));
        }
    }
}

TEST_CASE("cli exit codes") {
    const auto dir = fresh_dir("fedsurv_cli");
    const std::string out = (dir / "gen").string();

    const char* bad[] = {"fedsurv", "frobnicate"};
    CHECK(cli_main(2, bad) == 1);

    const char* missing[] = {"fedsurv", "evaluate", "--checkpoint",
                             "/nonexistent/x.json"};
    CHECK(cli_main(4, missing) == 2);

    // tiny generate through the config-file path
    const auto cfg_path = dir / "cfg.json";
    atomic_write_file(cfg_path,
                      "{\"dataset\":{\"name\":\"tiny\",\"synthetic\":{\"n\":50,"
                      "\"p\":2}},\"seed\":3}");
    const std::string cfg_flag = cfg_path.string();
    const char* gen_args[] = {"fedsurv",  "generate", "--config",
                              cfg_flag.c_str(), "--out",    out.c_str(),
                              "--censor-prob", "0.5"};
    CHECK(cli_main(8, gen_args) == 0);
    CHECK(std::filesystem::exists(dir / "gen" / "uncensored.csv"));
    CHECK(std::filesystem::exists(dir / "gen" / "cc50.csv"));
}

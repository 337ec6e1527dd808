#include "fedsurv/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>

#include <json.hpp>

#include "fedsurv/errors.hpp"
#include "fedsurv/io_util.hpp"
#include "fedsurv/metrics.hpp"
#include "fedsurv/rng.hpp"
#include "json_codec.hpp"

namespace fedsurv {

using nlohmann::json;

namespace {

ClientState make_client(std::uint32_t id, std::span<const SurvivalRecord> shard,
                        std::uint64_t seed) {
    ClientState client;
    client.client_id = id;
    const std::size_t n = shard.size();
    auto gen = rng::make_stream(seed, rng::Stream::kClientSplit, id);
    const std::vector<std::size_t> order = rng::shuffled_indices(n, gen);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(0.8 * static_cast<double>(n)));
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_train) {
            client.records.push_back(shard[order[i]]);
        } else {
            client.validation_records.push_back(shard[order[i]]);
        }
    }
    return client;
}

double mean_of(std::span<const double> values) {
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values, double mean) {
    if (values.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::string fixed4(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << v;
    return out.str();
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.dropout_rate = j.value("dropout_rate", base.dropout_rate);
    base.max_epochs = j.value("max_epochs", base.max_epochs);
    base.patience = j.value("patience", base.patience);
    base.batch_size = j.value("batch_size", base.batch_size);
    return base;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"dropout_rate", c.dropout_rate},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"batch_size", c.batch_size}};
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir,
                                      std::uint64_t seed) {
    return dir / ("checkpoint_seed" + std::to_string(seed) + ".json");
}

} // namespace

std::string to_string(RunMode mode) {
    return mode == RunMode::kCentralized ? "centralized" : "federated";
}

RunMode run_mode_from_string(const std::string& text) {
    if (text == "centralized") return RunMode::kCentralized;
    if (text == "federated") return RunMode::kFederated;
    throw DomainError("unknown mode '" + text + "' (use centralized or federated)");
}

void ExperimentConfig::validate() const {
    if (repeats == 0) throw DomainError("repeats must be at least one");
    if (hidden_dims.empty()) throw DomainError("at least one hidden layer required");
    for (std::size_t d : hidden_dims) {
        if (d == 0) throw DomainError("hidden layer widths must be positive");
    }
    federation.validate();
    model.validate();
    if (dataset.kind == DatasetSpec::Kind::kSynthetic) dataset.synth.validate();
    if (dataset.kind == DatasetSpec::Kind::kCsv && dataset.csv_path.empty()) {
        throw DomainError("csv dataset needs a path");
    }
}

std::vector<SurvivalRecord> materialize_dataset(const DatasetSpec& dataset,
                                                std::uint64_t seed) {
    if (dataset.kind == DatasetSpec::Kind::kCsv) {
        return load_csv(dataset.csv_path, dataset.duration_column,
                        dataset.event_column);
    }
    SynthConfig synth = dataset.synth;
    synth.seed = seed;
    auto gen = rng::make_stream(seed, rng::Stream::kDataGen);
    std::vector<SurvivalRecord> records = generate_uncensored(synth, gen);
    if (synth.censor_prob > 0.0) {
        auto cen = rng::make_stream(seed, rng::Stream::kCensoring);
        records = apply_case_censoring(std::move(records), synth.censor_prob, cen);
    }
    return records;
}

TrainTestSplit train_test_split(std::span<const SurvivalRecord> records,
                                std::uint64_t seed) {
    if (records.size() < 2) {
        throw DomainError("need at least two records to split train/test");
    }
    auto gen = rng::make_stream(seed, rng::Stream::kTestSplit);
    const std::vector<std::size_t> order = rng::shuffled_indices(records.size(), gen);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(0.8 * static_cast<double>(records.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, records.size() - 1);
    TrainTestSplit split;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i < n_train) {
            split.train.push_back(records[order[i]]);
        } else {
            split.test.push_back(records[order[i]]);
        }
    }
    return split;
}

SeedOutcome run_single_seed(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    const std::vector<SurvivalRecord> records =
        materialize_dataset(config.dataset, seed);
    validate_records(records);
    const TrainTestSplit split = train_test_split(records, seed);

    auto part_gen = rng::make_stream(seed, rng::Stream::kPartition);
    const auto shards =
        partition_iid(split.train, config.federation.num_clients, part_gen);
    std::vector<ClientState> clients;
    clients.reserve(shards.size());
    for (std::size_t k = 0; k < shards.size(); ++k) {
        clients.push_back(make_client(static_cast<std::uint32_t>(k), shards[k], seed));
    }

    const std::size_t p = records.front().covariates.size();
    std::vector<std::size_t> dims;
    dims.push_back(p);
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(config.federation.grid_points);
    const ModelParams init =
        ModelParams::init(dims, rng::mix(seed, rng::Stream::kModelInit));

    SeedOutcome outcome;
    Channel channel(config.dump_messages ? &outcome.trace : nullptr);

    if (config.mode == RunMode::kFederated) {
        ServerState server;
        server.config = config.federation;
        server.config.seed = seed;
        run_grid_phase(clients, server, channel);
        run_pseudo_phase(clients, server, channel);
        server.global_params = init;
        FederatedResult result = run_federated_training(clients, server, channel);
        outcome.params = std::move(result.params);
        outcome.grid = server.grid;
        outcome.round_logs = std::move(result.rounds);
        outcome.row.rounds = config.federation.rounds;
        outcome.row.epochs = result.total_local_epochs;
    } else {
        // The grid still comes from the per-client horizons so that both
        // modes evaluate the same time points.
        std::vector<double> max_times;
        for (const auto& client : clients) {
            if (client.records.empty()) {
                throw ProtocolError("client holds no training records");
            }
            double mt = 0.0;
            for (const auto& r : client.records) mt = std::max(mt, r.time);
            max_times.push_back(mt);
        }
        const TimeGrid grid =
            negotiate_time_grid(max_times, config.federation.grid_points);
        auto central_gen = rng::make_stream(seed, rng::Stream::kPartition);
        const auto whole = partition_iid(split.train, 1, central_gen);
        ClientState central = make_client(0, whole[0], seed);
        const PartialMatrix matrix = build_partial_matrix(central.records, grid);
        const PseudoValueMatrix pseudo =
            pseudo_values(matrix, central.records, matrix.at_risk_initial);
        TrainConfig train_cfg = config.model;
        train_cfg.seed = rng::mix(seed, rng::Stream::kLocalTrain, 1, 0);
        TrainResult result = train_local(central.records, pseudo,
                                         central.validation_records, init, train_cfg);
        outcome.params = std::move(result.params);
        outcome.grid = grid;
        outcome.central_history = std::move(result.history);
        outcome.row.rounds = 0;
        outcome.row.epochs = result.epochs_run;
    }

    const PredictedCurves curves =
        predict_curves(outcome.params, split.test, outcome.grid);
    outcome.row.cindex = td_cindex(curves, split.test);
    outcome.row.ibrier = integrated_brier(curves, split.test);
    outcome.row.dataset = config.dataset.name;
    outcome.row.mode = to_string(config.mode);
    outcome.row.seed = seed;
    outcome.row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return outcome;
}

RunOutput cmd_run(const ExperimentConfig& config) {
    config.validate();
    const std::filesystem::path out_dir(config.out_dir);
    std::filesystem::create_directories(out_dir);

    std::vector<std::future<SeedOutcome>> jobs;
    jobs.reserve(config.repeats);
    for (std::size_t i = 0; i < config.repeats; ++i) {
        const std::uint64_t seed = config.seed + i;
        jobs.push_back(std::async(std::launch::async, [&config, seed] {
            try {
                return run_single_seed(config, seed);
            } catch (const std::exception& e) {
                throw TrainingError("seed " + std::to_string(seed) +
                                    " failed: " + e.what());
            }
        }));
    }

    RunOutput output;
    std::vector<double> cindex, ibrier;
    std::ostringstream results, timings;
    results << "dataset,mode,seed,cindex,ibrier,rounds,epochs\n";
    timings << "seed,wall_time_s\n";
    for (auto& job : jobs) {
        SeedOutcome outcome = job.get();
        const ResultRow& row = outcome.row;
        results << row.dataset << ',' << row.mode << ',' << row.seed << ','
                << format_double(row.cindex) << ',' << format_double(row.ibrier)
                << ',' << row.rounds << ',' << row.epochs << '\n';
        timings << row.seed << ',' << format_double(row.wall_time_s) << '\n';
        cindex.push_back(row.cindex);
        ibrier.push_back(row.ibrier);

        save_checkpoint(checkpoint_path(out_dir, row.seed),
                        Checkpoint{row.dataset, row.mode, row.seed, row.rounds,
                                   row.epochs, outcome.grid, outcome.params});
        if (!outcome.round_logs.empty()) {
            std::ostringstream log;
            log << "round,participants,mean_local_loss,mean_val_cindex\n";
            for (const auto& r : outcome.round_logs) {
                log << r.round << ',';
                for (std::size_t i = 0; i < r.participants.size(); ++i) {
                    log << (i ? ";" : "") << r.participants[i];
                }
                log << ',' << format_double(r.mean_local_loss) << ','
                    << format_double(r.mean_val_cindex) << '\n';
            }
            log.flush();
            atomic_write_file(
                out_dir / ("rounds_seed" + std::to_string(row.seed) + ".csv"),
                log.str());
        }
        if (!outcome.central_history.empty()) {
            std::ostringstream log;
            log << "epoch,train_loss,val_cindex\n";
            for (const auto& e : outcome.central_history) {
                log << e.epoch << ',' << format_double(e.train_loss) << ','
                    << format_double(e.val_cindex) << '\n';
            }
            atomic_write_file(
                out_dir / ("history_seed" + std::to_string(row.seed) + ".csv"),
                log.str());
        }
        if (config.dump_messages) {
            outcome.trace.dump(out_dir /
                               ("messages_seed" + std::to_string(row.seed) + ".jsonl"));
        }
        output.rows.push_back(row);
    }

    output.summary.cindex_mean = mean_of(cindex);
    output.summary.cindex_std = sample_std(cindex, output.summary.cindex_mean);
    output.summary.ibrier_mean = mean_of(ibrier);
    output.summary.ibrier_std = sample_std(ibrier, output.summary.ibrier_mean);

    atomic_write_file(out_dir / "results.csv", results.str());
    atomic_write_file(out_dir / "timings.csv", timings.str());
    atomic_write_file(out_dir / "config.json", config_to_json(config) + "\n");

    std::ostringstream summary_csv;
    summary_csv << "dataset,mode,metric,mean,std\n";
    summary_csv << config.dataset.name << ',' << to_string(config.mode) << ",cindex,"
                << format_double(output.summary.cindex_mean) << ','
                << format_double(output.summary.cindex_std) << '\n';
    summary_csv << config.dataset.name << ',' << to_string(config.mode) << ",ibrier,"
                << format_double(output.summary.ibrier_mean) << ','
                << format_double(output.summary.ibrier_std) << '\n';
    atomic_write_file(out_dir / "summary.csv", summary_csv.str());

    const std::string cent_c =
        config.mode == RunMode::kCentralized
            ? fixed4(output.summary.cindex_mean) + " (" +
                  fixed4(output.summary.cindex_std) + ")"
            : "-";
    const std::string cent_b =
        config.mode == RunMode::kCentralized
            ? fixed4(output.summary.ibrier_mean) + " (" +
                  fixed4(output.summary.ibrier_std) + ")"
            : "-";
    const std::string fed_c =
        config.mode == RunMode::kFederated
            ? fixed4(output.summary.cindex_mean) + " (" +
                  fixed4(output.summary.cindex_std) + ")"
            : "-";
    const std::string fed_b =
        config.mode == RunMode::kFederated
            ? fixed4(output.summary.ibrier_mean) + " (" +
                  fixed4(output.summary.ibrier_std) + ")"
            : "-";
    std::ostringstream table;
    table << "dataset          metric   centralized        federated\n";
    auto pad = [](std::string s, std::size_t width) {
        if (s.size() < width) s.append(width - s.size(), ' ');
        return s;
    };
    table << pad(config.dataset.name, 17) << pad("Cindex", 9) << pad(cent_c, 19)
          << fed_c << '\n';
    table << pad("", 17) << pad("iBrier", 9) << pad(cent_b, 19) << fed_b << '\n';
    atomic_write_file(out_dir / "summary.txt", table.str());
    return output;
}

void cmd_generate(const SynthConfig& config, std::vector<double> censor_probs,
                  const std::filesystem::path& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);
    auto gen = rng::make_stream(config.seed, rng::Stream::kDataGen);
    const std::vector<SurvivalRecord> uncensored = generate_uncensored(config, gen);
    write_csv(out_dir / "uncensored.csv", uncensored);

    json files = json::object();
    files["uncensored"] = "uncensored.csv";
    json counts = json::object();
    counts["uncensored"] = json{{"rows", uncensored.size()}, {"censored", 0}};
    for (double prob : censor_probs) {
        if (!(prob >= 0.0 && prob <= 1.0)) {
            throw DomainError("censoring probability must lie in [0, 1]");
        }
        const auto tag = static_cast<std::uint64_t>(std::llround(prob * 100.0));
        auto cen = rng::make_stream(config.seed, rng::Stream::kCensoring, tag);
        const std::vector<SurvivalRecord> censored =
            apply_case_censoring(uncensored, prob, cen);
        const std::string name = "cc" + std::to_string(tag) + ".csv";
        write_csv(out_dir / name, censored);
        std::size_t censored_count = 0;
        for (const auto& r : censored) censored_count += r.event ? 0 : 1;
        files["cc" + std::to_string(tag)] = name;
        counts["cc" + std::to_string(tag)] =
            json{{"rows", censored.size()}, {"censored", censored_count}};
    }

    json manifest;
    manifest["config"] = json{{"n", config.n},
                              {"p", config.p},
                              {"mu", config.mu},
                              {"sigma", config.sigma},
                              {"weibull_scale", config.weibull_scale},
                              {"weibull_shape", config.weibull_shape},
                              {"seed", config.seed}};
    manifest["censor_probs"] = censor_probs;
    manifest["files"] = files;
    manifest["counts"] = counts;
    atomic_write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

ResultRow cmd_evaluate(const std::filesystem::path& checkpoint_path,
                       const DatasetSpec& dataset,
                       std::optional<std::uint64_t> seed_override) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const std::uint64_t seed = seed_override.value_or(ckpt.seed);
    const std::vector<SurvivalRecord> records = materialize_dataset(dataset, seed);
    validate_records(records);
    if (!records.empty() &&
        records.front().covariates.size() != ckpt.params.input_dim()) {
        throw DomainError("checkpoint expects " +
                          std::to_string(ckpt.params.input_dim()) +
                          " covariates, dataset has " +
                          std::to_string(records.front().covariates.size()));
    }
    const TrainTestSplit split = train_test_split(records, seed);
    const PredictedCurves curves = predict_curves(ckpt.params, split.test, ckpt.grid);
    ResultRow row;
    row.dataset = dataset.name;
    row.mode = ckpt.mode;
    row.seed = seed;
    row.cindex = td_cindex(curves, split.test);
    row.ibrier = integrated_brier(curves, split.test);
    row.rounds = ckpt.rounds;
    row.epochs = ckpt.epochs;
    return row;
}

void cmd_pseudo(const std::vector<std::filesystem::path>& shard_paths,
                const std::string& duration_column, const std::string& event_column,
                std::size_t grid_points, const std::filesystem::path& out_dir,
                bool dump_messages) {
    if (shard_paths.empty()) throw DomainError("need at least one shard file");
    std::filesystem::create_directories(out_dir);
    std::vector<ClientState> clients;
    for (std::size_t k = 0; k < shard_paths.size(); ++k) {
        ClientState client;
        client.client_id = static_cast<std::uint32_t>(k);
        client.records = load_csv(shard_paths[k], duration_column, event_column);
        if (client.records.empty()) {
            throw IngestionError(shard_paths[k].string() + " holds no rows");
        }
        clients.push_back(std::move(client));
    }
    MessageTrace trace;
    Channel channel(dump_messages ? &trace : nullptr);
    ServerState server;
    server.config.num_clients = static_cast<std::uint32_t>(clients.size());
    server.config.grid_points = grid_points;
    run_grid_phase(clients, server, channel);
    run_pseudo_phase(clients, server, channel);

    std::ostringstream grid_csv;
    grid_csv << "time\n";
    for (double t : server.grid.points()) grid_csv << format_double(t) << '\n';
    atomic_write_file(out_dir / "grid.csv", grid_csv.str());

    for (const auto& client : clients) {
        std::ostringstream out;
        out << "duration,event";
        for (std::size_t j = 1; j <= server.grid.size(); ++j) out << ",pv" << j;
        out << '\n';
        for (std::size_t i = 0; i < client.records.size(); ++i) {
            out << format_double(client.records[i].time) << ','
                << (client.records[i].event ? 1 : 0);
            for (std::size_t j = 0; j < server.grid.size(); ++j) {
                out << ',' << format_double(client.pseudo.values.at(i, j));
            }
            out << '\n';
        }
        atomic_write_file(out_dir / ("pseudo_shard" + std::to_string(client.client_id) +
                                     ".csv"),
                          out.str());
    }
    if (dump_messages) trace.dump(out_dir / "messages.jsonl");
}

ExperimentConfig preset_config(const std::string& name) {
    const auto make = [](const std::string& label, double censor, bool desk) {
        ExperimentConfig cfg;
        cfg.dataset.kind = DatasetSpec::Kind::kSynthetic;
        cfg.dataset.name = label;
        cfg.dataset.synth.censor_prob = censor;
        cfg.dataset.synth.n = desk ? 4000 : 20000;
        cfg.federation.num_clients = desk ? 5 : 10;
        cfg.federation.rounds = desk ? 20 : 50;
        cfg.federation.participation_fraction = 0.75;
        cfg.federation.grid_points = 8;
        cfg.federation.local_train.max_epochs = desk ? 30 : 1000;
        cfg.model.max_epochs = desk ? 200 : 1000;
        cfg.repeats = desk ? 3 : 5;
        return cfg;
    };
    if (name == "cc25-desk") return make(name, 0.25, true);
    if (name == "cc50-desk") return make(name, 0.50, true);
    if (name == "cc75-desk") return make(name, 0.75, true);
    if (name == "cc25-full") return make(name, 0.25, false);
    if (name == "cc50-full") return make(name, 0.50, false);
    if (name == "cc75-full") return make(name, 0.75, false);
    throw DomainError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    return {"cc25-desk", "cc50-desk", "cc75-desk",
            "cc25-full", "cc50-full", "cc75-full"};
}

ExperimentConfig config_from_json_file(const std::filesystem::path& path) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw IngestionError(path.string() + " is not a JSON object");
    }
    ExperimentConfig cfg;
    if (doc.contains("dataset")) {
        const json& d = doc["dataset"];
        cfg.dataset.name = d.value("name", cfg.dataset.name);
        if (d.contains("csv")) {
            const json& c = d["csv"];
            cfg.dataset.kind = DatasetSpec::Kind::kCsv;
            cfg.dataset.csv_path = c.value("path", std::string());
            cfg.dataset.duration_column =
                c.value("duration_column", cfg.dataset.duration_column);
            cfg.dataset.event_column =
                c.value("event_column", cfg.dataset.event_column);
        } else if (d.contains("synthetic")) {
            const json& s = d["synthetic"];
            cfg.dataset.kind = DatasetSpec::Kind::kSynthetic;
            cfg.dataset.synth.n = s.value("n", cfg.dataset.synth.n);
            cfg.dataset.synth.p = s.value("p", cfg.dataset.synth.p);
            cfg.dataset.synth.mu = s.value("mu", cfg.dataset.synth.mu);
            cfg.dataset.synth.sigma = s.value("sigma", cfg.dataset.synth.sigma);
            cfg.dataset.synth.weibull_scale =
                s.value("weibull_scale", cfg.dataset.synth.weibull_scale);
            cfg.dataset.synth.weibull_shape =
                s.value("weibull_shape", cfg.dataset.synth.weibull_shape);
            cfg.dataset.synth.censor_prob =
                s.value("censor_prob", cfg.dataset.synth.censor_prob);
        }
    }
    if (doc.contains("federation")) {
        const json& f = doc["federation"];
        cfg.federation.num_clients = f.value("num_clients", cfg.federation.num_clients);
        cfg.federation.participation_fraction =
            f.value("participation_fraction", cfg.federation.participation_fraction);
        cfg.federation.rounds = f.value("rounds", cfg.federation.rounds);
        cfg.federation.grid_points =
            f.value("grid_points", cfg.federation.grid_points);
        cfg.federation.size_weighted =
            f.value("size_weighted", cfg.federation.size_weighted);
        if (f.contains("local_train")) {
            cfg.federation.local_train =
                train_config_from_json(f["local_train"], cfg.federation.local_train);
        }
    }
    if (doc.contains("model")) {
        cfg.model = train_config_from_json(doc["model"], cfg.model);
    }
    if (doc.contains("hidden_dims")) {
        cfg.hidden_dims = doc["hidden_dims"].get<std::vector<std::size_t>>();
    }
    if (doc.contains("mode")) {
        cfg.mode = run_mode_from_string(doc["mode"].get<std::string>());
    }
    cfg.repeats = doc.value("repeats", cfg.repeats);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.out_dir = doc.value("out", cfg.out_dir);
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json dataset;
    dataset["name"] = cfg.dataset.name;
    if (cfg.dataset.kind == DatasetSpec::Kind::kCsv) {
        dataset["csv"] = json{{"path", cfg.dataset.csv_path},
                              {"duration_column", cfg.dataset.duration_column},
                              {"event_column", cfg.dataset.event_column}};
    } else {
        dataset["synthetic"] = json{{"n", cfg.dataset.synth.n},
                                    {"p", cfg.dataset.synth.p},
                                    {"mu", cfg.dataset.synth.mu},
                                    {"sigma", cfg.dataset.synth.sigma},
                                    {"weibull_scale", cfg.dataset.synth.weibull_scale},
                                    {"weibull_shape", cfg.dataset.synth.weibull_shape},
                                    {"censor_prob", cfg.dataset.synth.censor_prob}};
    }
    json doc;
    doc["dataset"] = dataset;
    doc["federation"] = json{
        {"num_clients", cfg.federation.num_clients},
        {"participation_fraction", cfg.federation.participation_fraction},
        {"rounds", cfg.federation.rounds},
        {"grid_points", cfg.federation.grid_points},
        {"size_weighted", cfg.federation.size_weighted},
        {"local_train", train_config_to_json(cfg.federation.local_train)}};
    doc["model"] = train_config_to_json(cfg.model);
    doc["hidden_dims"] = cfg.hidden_dims;
    doc["mode"] = to_string(cfg.mode);
    doc["repeats"] = cfg.repeats;
    doc["seed"] = cfg.seed;
    doc["out"] = cfg.out_dir;
    return doc.dump(2);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    json doc;
    doc["dataset"] = ckpt.dataset;
    doc["mode"] = ckpt.mode;
    doc["seed"] = ckpt.seed;
    doc["rounds"] = ckpt.rounds;
    doc["epochs"] = ckpt.epochs;
    doc["grid"] = codec::grid_to_json(ckpt.grid);
    doc["params"] = codec::params_to_json(ckpt.params);
    atomic_write_file(path, doc.dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw IngestionError(path.string() + " is not a valid checkpoint");
    }
    try {
        Checkpoint ckpt;
        ckpt.dataset = doc.at("dataset").get<std::string>();
        ckpt.mode = doc.at("mode").get<std::string>();
        ckpt.seed = doc.at("seed").get<std::uint64_t>();
        ckpt.rounds = doc.at("rounds").get<std::uint64_t>();
        ckpt.epochs = doc.at("epochs").get<std::uint64_t>();
        ckpt.grid = codec::grid_from_json(doc.at("grid"));
        ckpt.params = codec::params_from_json(doc.at("params"));
        return ckpt;
    } catch (const json::exception& e) {
        throw IngestionError(path.string() + ": " + e.what());
    }
}

} // namespace fedsurv

#include "fedsurv/federation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>

#include "fedsurv/errors.hpp"
#include "fedsurv/metrics.hpp"
#include "fedsurv/rng.hpp"

namespace fedsurv {

namespace {

double max_observed_time(const ClientState& client) {
    if (client.records.empty()) {
        throw ProtocolError("client " + std::to_string(client.client_id) +
                            " holds no training records");
    }
    double max_time = 0.0;
    for (const auto& r : client.records) max_time = std::max(max_time, r.time);
    return max_time;
}

} // namespace

void FederationConfig::validate() const {
    if (num_clients == 0) throw DomainError("a federation needs at least one client");
    if (!(participation_fraction > 0.0 && participation_fraction <= 1.0)) {
        throw DomainError("participation fraction must lie in (0, 1]");
    }
    if (grid_points == 0) throw DomainError("grid must hold at least one point");
    local_train.validate();
}

TimeGrid negotiate_time_grid(std::span<const double> max_times,
                             std::size_t num_points) {
    if (max_times.empty()) throw ProtocolError("no client max-times reported");
    if (num_points == 0) throw DomainError("grid must hold at least one point");
    double horizon = max_times[0];
    for (double t : max_times) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw ProtocolError("client max-times must be positive and finite");
        }
        horizon = std::min(horizon, t);
    }
    std::vector<double> points(num_points);
    for (std::size_t j = 1; j <= num_points; ++j) {
        points[j - 1] = horizon * static_cast<double>(j) / 10.0;
    }
    return TimeGrid(std::move(points));
}

void run_grid_phase(std::vector<ClientState>& clients, ServerState& server,
                    Channel& channel) {
    std::vector<double> max_times;
    max_times.reserve(clients.size());
    for (const auto& client : clients) {
        const MaxTimeReport report = channel.transfer(
            MaxTimeReport{client.client_id, max_observed_time(client)});
        max_times.push_back(report.max_time);
    }
    server.grid = negotiate_time_grid(max_times, server.config.grid_points);
    for (auto& client : clients) {
        client.grid = channel.transfer(GridBroadcast{server.grid}).grid;
    }
}

void run_pseudo_phase(std::vector<ClientState>& clients, ServerState& server,
                      Channel& channel) {
    if (server.grid.empty()) {
        throw ProtocolError("pseudo phase requires a negotiated time grid");
    }
    std::vector<PartialMatrix> uploads;
    uploads.reserve(clients.size());
    for (const auto& client : clients) {
        if (client.records.empty()) {
            throw ProtocolError("client " + std::to_string(client.client_id) +
                                " holds no training records");
        }
        const PartialMatrixUpload upload = channel.transfer(PartialMatrixUpload{
            client.client_id, build_partial_matrix(client.records, client.grid)});
        if (upload.matrix.grid != server.grid) {
            throw ProtocolError("client matrix grid differs from the negotiated grid");
        }
        uploads.push_back(upload.matrix);
    }
    server.global_matrix = aggregate_partial_matrices(uploads);
    const std::uint64_t total_n = server.global_matrix.at_risk_initial;
    for (auto& client : clients) {
        const GlobalMatrixBroadcast broadcast =
            channel.transfer(GlobalMatrixBroadcast{server.global_matrix, total_n});
        client.pseudo =
            pseudo_values(broadcast.matrix, client.records, broadcast.total_n);
    }
}

std::vector<std::uint32_t> select_clients(std::uint64_t round,
                                          const FederationConfig& config) {
    config.validate();
    const double target = config.participation_fraction *
                          static_cast<double>(config.num_clients);
    std::uint64_t count = static_cast<std::uint64_t>(std::floor(target + 0.5));
    count = std::max<std::uint64_t>(1, std::min<std::uint64_t>(count, config.num_clients));

    std::vector<std::uint32_t> ids(config.num_clients);
    for (std::uint32_t k = 0; k < config.num_clients; ++k) ids[k] = k;
    auto gen = rng::make_stream(config.seed, rng::Stream::kClientSelect, round);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t j = i + rng::bounded(gen, config.num_clients - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
    return ids;
}

ModelParams fedavg_aggregate(std::span<const ModelParams> updates) {
    std::vector<double> weights(updates.size(), 1.0);
    return fedavg_aggregate_weighted(updates, weights);
}

ModelParams fedavg_aggregate_weighted(std::span<const ModelParams> updates,
                                      std::span<const double> weights) {
    if (updates.empty()) throw ProtocolError("cannot aggregate zero model updates");
    if (weights.size() != updates.size()) {
        throw ProtocolError("one aggregation weight per update required");
    }
    ModelParams total = updates.front();
    const auto scale_check = [&](const ModelParams& p) {
        if (p.layer_dims != total.layer_dims) {
            throw ProtocolError("model updates disagree on layer shapes");
        }
    };
    double weight_sum = weights[0];
    for (std::size_t l = 0; l < total.num_layers(); ++l) {
        for (double& v : total.weights[l]) v *= weights[0];
        for (double& v : total.biases[l]) v *= weights[0];
    }
    for (std::size_t k = 1; k < updates.size(); ++k) {
        scale_check(updates[k]);
        weight_sum += weights[k];
        for (std::size_t l = 0; l < total.num_layers(); ++l) {
            const auto& w = updates[k].weights[l];
            const auto& b = updates[k].biases[l];
            if (w.size() != total.weights[l].size() ||
                b.size() != total.biases[l].size()) {
                throw ProtocolError("model updates disagree on layer shapes");
            }
            for (std::size_t i = 0; i < w.size(); ++i) {
                total.weights[l][i] += weights[k] * w[i];
            }
            for (std::size_t i = 0; i < b.size(); ++i) {
                total.biases[l][i] += weights[k] * b[i];
            }
        }
    }
    if (!(weight_sum > 0.0)) throw ProtocolError("aggregation weights must sum > 0");
    for (std::size_t l = 0; l < total.num_layers(); ++l) {
        for (double& v : total.weights[l]) v /= weight_sum;
        for (double& v : total.biases[l]) v /= weight_sum;
    }
    return total;
}

FederatedResult run_federated_training(std::vector<ClientState>& clients,
                                       ServerState& server, Channel& channel) {
    server.config.validate();
    for (const auto& client : clients) {
        if (client.pseudo.values.rows != client.records.size()) {
            throw ProtocolError("client " + std::to_string(client.client_id) +
                                " has no pseudo values; run the pseudo phase first");
        }
    }

    FederatedResult result;
    for (std::uint64_t round = 1; round <= server.config.rounds; ++round) {
        const std::vector<std::uint32_t> selected = select_clients(round, server.config);

        // Broadcast, then train the selected clients. Local runs are
        // independent between barriers, so they may execute concurrently;
        // every reduction below walks ascending client ids.
        for (std::uint32_t id : selected) {
            clients[id].local_params =
                channel.transfer(ModelBroadcast{round, server.global_params}).params;
        }
        std::vector<TrainResult> local(selected.size());
        {
            std::vector<std::future<TrainResult>> jobs;
            jobs.reserve(selected.size());
            for (std::uint32_t id : selected) {
                ClientState& client = clients[id];
                TrainConfig cfg = server.config.local_train;
                cfg.seed = rng::mix(server.config.seed, rng::Stream::kLocalTrain,
                                    round, id);
                jobs.push_back(std::async(std::launch::async, [&client, cfg] {
                    return train_local(client.records, client.pseudo,
                                       client.validation_records,
                                       client.local_params, cfg);
                }));
            }
            for (std::size_t i = 0; i < jobs.size(); ++i) local[i] = jobs[i].get();
        }

        std::vector<ModelParams> updates;
        std::vector<double> weights;
        double loss_sum = 0.0;
        for (std::size_t i = 0; i < selected.size(); ++i) {
            const ModelUpdateUpload upload = channel.transfer(ModelUpdateUpload{
                round, selected[i], local[i].params});
            updates.push_back(upload.params);
            weights.push_back(static_cast<double>(clients[selected[i]].records.size()));
            loss_sum += local[i].history.empty() ? 0.0
                                                 : local[i].history.back().train_loss;
            result.total_local_epochs += local[i].epochs_run;
        }
        server.global_params = server.config.size_weighted
                                   ? fedavg_aggregate_weighted(updates, weights)
                                   : fedavg_aggregate(updates);
        server.round = round;

        RoundLog log;
        log.round = round;
        log.participants = selected;
        log.mean_local_loss = loss_sum / static_cast<double>(selected.size());
        double cindex_sum = 0.0;
        for (const auto& client : clients) {
            const PredictedCurves curves = predict_curves(
                server.global_params, client.validation_records, server.grid);
            cindex_sum += td_cindex(curves, client.validation_records);
        }
        log.mean_val_cindex = cindex_sum / static_cast<double>(clients.size());
        result.rounds.push_back(std::move(log));
    }
    result.params = server.global_params;
    return result;
}

} // namespace fedsurv

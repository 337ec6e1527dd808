#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedsurv/messages.hpp"
#include "fedsurv/model.hpp"
#include "fedsurv/survival.hpp"
#include "fedsurv/types.hpp"

namespace fedsurv {

struct FederationConfig {
    std::uint32_t num_clients = 10;
    double participation_fraction = 0.75;
    std::uint64_t rounds = 50;
    std::size_t grid_points = 8;
    TrainConfig local_train;
    std::uint64_t seed = 0;
    // Weight the aggregate by client sample counts instead of the plain mean.
    bool size_weighted = false;

    void validate() const;
};

struct ClientState {
    std::uint32_t client_id = 0;
    std::vector<SurvivalRecord> records;            // local training split
    std::vector<SurvivalRecord> validation_records; // local holdout
    TimeGrid grid;
    PseudoValueMatrix pseudo; // filled by the pseudo phase
    ModelParams local_params;
};

struct ServerState {
    ModelParams global_params;
    std::uint64_t round = 0;
    TimeGrid grid;
    PartialMatrix global_matrix;
    FederationConfig config;
};

// Shared horizon: grid point j sits at (j/10) of the smallest per-client
// maximum observed time, for j = 1..num_points.
TimeGrid negotiate_time_grid(std::span<const double> max_times,
                             std::size_t num_points);

// Clients report their maximum observed times; the server negotiates the
// grid and broadcasts it back. All exchange goes through `channel`.
void run_grid_phase(std::vector<ClientState>& clients, ServerState& server,
                    Channel& channel);

// The partial-matrix exchange: clients upload their aggregate counts, the
// server sums them and broadcasts the global matrix, and every client
// derives its subjects' pseudo values. No record ever leaves a client.
void run_pseudo_phase(std::vector<ClientState>& clients, ServerState& server,
                      Channel& channel);

// Deterministic uniform subset (round-half-up of fraction * K, at least
// one) keyed by the federation seed and the round number; ascending ids.
std::vector<std::uint32_t> select_clients(std::uint64_t round,
                                          const FederationConfig& config);

// Coordinatewise mean over updates, summed in the given (ascending
// client id) order.
ModelParams fedavg_aggregate(std::span<const ModelParams> updates);

// Mean weighted by per-update sample counts.
ModelParams fedavg_aggregate_weighted(std::span<const ModelParams> updates,
                                      std::span<const double> weights);

struct RoundLog {
    std::uint64_t round = 0;
    std::vector<std::uint32_t> participants;
    double mean_local_loss = 0.0;
    // Mean over all clients of the local-validation concordance of the
    // freshly aggregated global model.
    double mean_val_cindex = 0.0;
};

struct FederatedResult {
    ModelParams params;
    std::vector<RoundLog> rounds;
    std::uint64_t total_local_epochs = 0;
};

// FedAvg orchestration: per round, broadcast the global model to the
// selected clients, train locally on (covariates -> pseudo values), and
// average the uploaded updates. Requires a completed pseudo phase.
FederatedResult run_federated_training(std::vector<ClientState>& clients,
                                       ServerState& server, Channel& channel);

} // namespace fedsurv

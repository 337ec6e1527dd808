#pragma once

// Internal JSON codecs shared by the message layer, checkpoints and the
// experiment config loader.

#include <json.hpp>

#include "fedsurv/model.hpp"
#include "fedsurv/survival.hpp"
#include "fedsurv/types.hpp"

namespace fedsurv::codec {

inline nlohmann::json grid_to_json(const TimeGrid& grid) {
    return nlohmann::json{{"points", grid.points()}};
}

inline TimeGrid grid_from_json(const nlohmann::json& j) {
    return TimeGrid(j.at("points").get<std::vector<double>>());
}

inline nlohmann::json matrix_to_json(const PartialMatrix& m) {
    return nlohmann::json{{"grid", grid_to_json(m.grid)},
                          {"at_risk_initial", m.at_risk_initial},
                          {"events", m.events},
                          {"censored", m.censored}};
}

inline PartialMatrix matrix_from_json(const nlohmann::json& j) {
    PartialMatrix m;
    m.grid = grid_from_json(j.at("grid"));
    m.at_risk_initial = j.at("at_risk_initial").get<std::uint64_t>();
    m.events = j.at("events").get<std::vector<std::uint64_t>>();
    m.censored = j.at("censored").get<std::vector<std::uint64_t>>();
    m.validate();
    return m;
}

inline nlohmann::json params_to_json(const ModelParams& p) {
    return nlohmann::json{{"layer_dims", p.layer_dims},
                          {"weights", p.weights},
                          {"biases", p.biases}};
}

inline ModelParams params_from_json(const nlohmann::json& j) {
    ModelParams p;
    p.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    p.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    p.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    p.validate();
    return p;
}

} // namespace fedsurv::codec

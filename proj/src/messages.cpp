#include "fedsurv/messages.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedsurv/errors.hpp"
#include "fedsurv/io_util.hpp"
#include "json_codec.hpp"

namespace fedsurv {

using nlohmann::json;
using codec::grid_from_json;
using codec::grid_to_json;
using codec::matrix_from_json;
using codec::matrix_to_json;
using codec::params_from_json;
using codec::params_to_json;

namespace {

// Field schema: name -> kind. Shared by the parser and the audit.
enum class FieldKind { kClientId, kRound, kCount, kReal, kGrid, kMatrix, kParams };

struct FieldSpec {
    const char* name;
    FieldKind kind;
};

const std::vector<std::pair<std::string, std::vector<FieldSpec>>>& message_schemas() {
    static const std::vector<std::pair<std::string, std::vector<FieldSpec>>> schemas = {
        {"MaxTimeReport",
         {{"client_id", FieldKind::kClientId}, {"max_time", FieldKind::kReal}}},
        {"GridBroadcast", {{"grid", FieldKind::kGrid}}},
        {"PartialMatrixUpload",
         {{"client_id", FieldKind::kClientId}, {"matrix", FieldKind::kMatrix}}},
        {"GlobalMatrixBroadcast",
         {{"matrix", FieldKind::kMatrix}, {"total_n", FieldKind::kCount}}},
        {"ModelBroadcast",
         {{"round", FieldKind::kRound}, {"params", FieldKind::kParams}}},
        {"ModelUpdateUpload",
         {{"round", FieldKind::kRound},
          {"client_id", FieldKind::kClientId},
          {"params", FieldKind::kParams}}},
    };
    return schemas;
}

std::string check_real(const json& v, const std::string& where) {
    if (!v.is_number()) return where + " must be a number";
    const double d = v.get<double>();
    if (!std::isfinite(d)) return where + " must be finite";
    return {};
}

std::string check_unsigned(const json& v, const std::string& where) {
    if (!v.is_number_unsigned()) return where + " must be a nonnegative integer";
    return {};
}

std::string check_count_array(const json& v, const std::string& where) {
    if (!v.is_array()) return where + " must be an array of counts";
    for (const auto& item : v) {
        if (!item.is_number_unsigned()) {
            return where + " must contain only nonnegative integers";
        }
    }
    return {};
}

std::string check_grid(const json& v, const std::string& where) {
    if (!v.is_object()) return where + " must be an object";
    if (v.size() != 1 || !v.contains("points")) {
        return where + " must hold exactly the field 'points'";
    }
    const json& pts = v["points"];
    if (!pts.is_array() || pts.empty()) {
        return where + ".points must be a non-empty array";
    }
    double prev = 0.0;
    for (const auto& item : pts) {
        std::string err = check_real(item, where + ".points entry");
        if (!err.empty()) return err;
        const double t = item.get<double>();
        if (t <= prev) return where + ".points must be strictly increasing and positive";
        prev = t;
    }
    return {};
}

std::string check_matrix(const json& v, const std::string& where) {
    if (!v.is_object()) return where + " must be an object";
    static const std::vector<std::string> allowed = {"at_risk_initial", "censored",
                                                     "events", "grid"};
    for (const auto& [key, value] : v.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            return where + " carries unexpected field '" + key + "'";
        }
    }
    for (const auto& key : allowed) {
        if (!v.contains(key)) return where + " is missing field '" + key + "'";
    }
    if (auto err = check_grid(v["grid"], where + ".grid"); !err.empty()) return err;
    if (auto err = check_unsigned(v["at_risk_initial"], where + ".at_risk_initial");
        !err.empty()) {
        return err;
    }
    if (auto err = check_count_array(v["events"], where + ".events"); !err.empty()) {
        return err;
    }
    if (auto err = check_count_array(v["censored"], where + ".censored");
        !err.empty()) {
        return err;
    }
    const std::size_t m = v["grid"]["points"].size();
    if (v["events"].size() != m || v["censored"].size() != m) {
        return where + " count vectors must match the grid length";
    }
    return {};
}

std::string check_params(const json& v, const std::string& where) {
    if (!v.is_object()) return where + " must be an object";
    static const std::vector<std::string> allowed = {"biases", "layer_dims", "weights"};
    for (const auto& [key, value] : v.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            return where + " carries unexpected field '" + key + "'";
        }
    }
    for (const auto& key : allowed) {
        if (!v.contains(key)) return where + " is missing field '" + key + "'";
    }
    if (auto err = check_count_array(v["layer_dims"], where + ".layer_dims");
        !err.empty()) {
        return err;
    }
    for (const char* name : {"weights", "biases"}) {
        const json& tensors = v[name];
        if (!tensors.is_array()) return where + "." + name + " must be an array";
        for (const auto& layer : tensors) {
            if (!layer.is_array()) return where + "." + name + " must hold arrays";
            for (const auto& item : layer) {
                std::string err = check_real(item, where + "." + name + " entry");
                if (!err.empty()) return err;
            }
        }
    }
    return {};
}

std::string check_field(const json& v, FieldKind kind, const std::string& where) {
    switch (kind) {
        case FieldKind::kClientId:
        case FieldKind::kRound:
        case FieldKind::kCount:
            return check_unsigned(v, where);
        case FieldKind::kReal:
            return check_real(v, where);
        case FieldKind::kGrid:
            return check_grid(v, where);
        case FieldKind::kMatrix:
            return check_matrix(v, where);
        case FieldKind::kParams:
            return check_params(v, where);
    }
    return "unknown field kind";
}

} // namespace

std::string serialize_message(const Message& message) {
    json doc = std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MaxTimeReport>) {
                return json{{"type", "MaxTimeReport"},
                            {"client_id", m.client_id},
                            {"max_time", m.max_time}};
            } else if constexpr (std::is_same_v<T, GridBroadcast>) {
                return json{{"type", "GridBroadcast"}, {"grid", grid_to_json(m.grid)}};
            } else if constexpr (std::is_same_v<T, PartialMatrixUpload>) {
                return json{{"type", "PartialMatrixUpload"},
                            {"client_id", m.client_id},
                            {"matrix", matrix_to_json(m.matrix)}};
            } else if constexpr (std::is_same_v<T, GlobalMatrixBroadcast>) {
                return json{{"type", "GlobalMatrixBroadcast"},
                            {"matrix", matrix_to_json(m.matrix)},
                            {"total_n", m.total_n}};
            } else if constexpr (std::is_same_v<T, ModelBroadcast>) {
                return json{{"type", "ModelBroadcast"},
                            {"round", m.round},
                            {"params", params_to_json(m.params)}};
            } else {
                return json{{"type", "ModelUpdateUpload"},
                            {"round", m.round},
                            {"client_id", m.client_id},
                            {"params", params_to_json(m.params)}};
            }
        },
        message);
    return doc.dump();
}

Message deserialize_message(const std::string& text) {
    if (std::string err = check_message_schema(text); !err.empty()) {
        throw ProtocolError("malformed message: " + err);
    }
    const json doc = json::parse(text);
    const std::string type = doc.at("type").get<std::string>();
    try {
        if (type == "MaxTimeReport") {
            return MaxTimeReport{doc.at("client_id").get<std::uint32_t>(),
                                 doc.at("max_time").get<double>()};
        }
        if (type == "GridBroadcast") {
            return GridBroadcast{grid_from_json(doc.at("grid"))};
        }
        if (type == "PartialMatrixUpload") {
            return PartialMatrixUpload{doc.at("client_id").get<std::uint32_t>(),
                                       matrix_from_json(doc.at("matrix"))};
        }
        if (type == "GlobalMatrixBroadcast") {
            return GlobalMatrixBroadcast{matrix_from_json(doc.at("matrix")),
                                         doc.at("total_n").get<std::uint64_t>()};
        }
        if (type == "ModelBroadcast") {
            return ModelBroadcast{doc.at("round").get<std::uint64_t>(),
                                  params_from_json(doc.at("params"))};
        }
        return ModelUpdateUpload{doc.at("round").get<std::uint64_t>(),
                                 doc.at("client_id").get<std::uint32_t>(),
                                 params_from_json(doc.at("params"))};
    } catch (const DomainError& e) {
        throw ProtocolError(std::string("invalid message payload: ") + e.what());
    }
}

std::string check_message_schema(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) return "not valid JSON";
    if (!doc.is_object()) return "message must be a JSON object";
    if (!doc.contains("type") || !doc["type"].is_string()) {
        return "message must carry a string 'type'";
    }
    const std::string type = doc["type"].get<std::string>();
    for (const auto& [name, fields] : message_schemas()) {
        if (name != type) continue;
        for (const auto& [key, value] : doc.items()) {
            if (key == "type") continue;
            bool known = false;
            for (const auto& f : fields) known = known || key == f.name;
            if (!known) return type + " carries unexpected field '" + key + "'";
        }
        for (const auto& f : fields) {
            if (!doc.contains(f.name)) {
                return type + " is missing field '" + std::string(f.name) + "'";
            }
            if (std::string err = check_field(doc[f.name], f.kind,
                                              type + "." + f.name);
                !err.empty()) {
                return err;
            }
        }
        return {};
    }
    return "unknown message type '" + type + "'";
}

std::vector<std::string> audit_trace_lines(std::span<const std::string> lines) {
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (std::string err = check_message_schema(lines[i]); !err.empty()) {
            failures.push_back("line " + std::to_string(i + 1) + ": " + err);
        }
    }
    return failures;
}

std::vector<std::string> audit_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open trace file " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return audit_trace_lines(lines);
}

void MessageTrace::dump(const std::filesystem::path& path) const {
    std::ostringstream out;
    for (const auto& line : lines) out << line << '\n';
    atomic_write_file(path, out.str());
}

} // namespace fedsurv

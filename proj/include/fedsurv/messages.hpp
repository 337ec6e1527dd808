#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedsurv/model.hpp"
#include "fedsurv/survival.hpp"
#include "fedsurv/types.hpp"

namespace fedsurv {

// Everything that may cross the client/server boundary. Nothing here can
// carry a subject-level record: only scalar max-times, grid points,
// aggregate integer counts and model parameters.
struct MaxTimeReport {
    std::uint32_t client_id = 0;
    double max_time = 0.0;
    friend bool operator==(const MaxTimeReport&, const MaxTimeReport&) = default;
};

struct GridBroadcast {
    TimeGrid grid;
    friend bool operator==(const GridBroadcast&, const GridBroadcast&) = default;
};

struct PartialMatrixUpload {
    std::uint32_t client_id = 0;
    PartialMatrix matrix;
    friend bool operator==(const PartialMatrixUpload&,
                           const PartialMatrixUpload&) = default;
};

struct GlobalMatrixBroadcast {
    PartialMatrix matrix;
    std::uint64_t total_n = 0;
    friend bool operator==(const GlobalMatrixBroadcast&,
                           const GlobalMatrixBroadcast&) = default;
};

struct ModelBroadcast {
    std::uint64_t round = 0;
    ModelParams params;
    friend bool operator==(const ModelBroadcast&, const ModelBroadcast&) = default;
};

struct ModelUpdateUpload {
    std::uint64_t round = 0;
    std::uint32_t client_id = 0;
    ModelParams params;
    friend bool operator==(const ModelUpdateUpload&,
                           const ModelUpdateUpload&) = default;
};

using Message = std::variant<MaxTimeReport, GridBroadcast, PartialMatrixUpload,
                             GlobalMatrixBroadcast, ModelBroadcast, ModelUpdateUpload>;

// Canonical one-line JSON document: sorted field names, exact integers,
// shortest round-trip reals.
std::string serialize_message(const Message& message);

// Parses and validates a canonical document. Throws ProtocolError on
// malformed input.
Message deserialize_message(const std::string& text);

// Strict schema check of one serialized message: known type tag, exactly
// the allowed fields, integer counts, finite reals. Returns an empty
// string when clean, otherwise a description of the violation.
std::string check_message_schema(const std::string& text);

// Schema-checks every line of a message trace; returns one entry per
// offending line.
std::vector<std::string> audit_trace_lines(std::span<const std::string> lines);
std::vector<std::string> audit_trace_file(const std::filesystem::path& path);

// Ordered log of every document that crossed the boundary.
struct MessageTrace {
    std::vector<std::string> lines;
    void dump(const std::filesystem::path& path) const;
};

// In-process transport. Every transfer serializes to the canonical text,
// optionally records it, and hands the receiver a reparsed copy, so the
// trace is exactly what the receiving side saw.
class Channel {
  public:
    explicit Channel(MessageTrace* trace = nullptr) : trace_(trace) {}

    template <typename T>
    T transfer(const T& message) {
        const std::string text = serialize_message(Message(message));
        if (trace_) trace_->lines.push_back(text);
        return std::get<T>(deserialize_message(text));
    }

  private:
    MessageTrace* trace_;
};

} // namespace fedsurv

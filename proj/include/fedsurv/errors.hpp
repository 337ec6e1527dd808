#pragma once

#include <stdexcept>
#include <string>

namespace fedsurv {

// Invalid values or shapes in caller-supplied data.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A federation contract violation: mismatched grids, counts that do not
// reconcile, malformed or unexpected messages.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (CSV, config, checkpoints).
struct IngestionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced non-finite parameters or gradients.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A metric is undefined for the given inputs (e.g. no comparable pairs).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fedsurv

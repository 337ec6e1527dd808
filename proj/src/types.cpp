#include "fedsurv/types.hpp"

#include <cmath>
#include <string>

namespace fedsurv {

void validate_record(const SurvivalRecord& record, std::size_t num_covariates) {
    if (!std::isfinite(record.time) || record.time < 0.0) {
        throw DomainError("record time must be finite and nonnegative, got " +
                          std::to_string(record.time));
    }
    if (record.covariates.size() != num_covariates) {
        throw DomainError("record has " + std::to_string(record.covariates.size()) +
                          " covariates, expected " + std::to_string(num_covariates));
    }
}

void validate_records(std::span<const SurvivalRecord> records) {
    if (records.empty()) return;
    const std::size_t p = records.front().covariates.size();
    for (const auto& r : records) validate_record(r, p);
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw DomainError("time grid must hold at least one point");
    double prev = 0.0;
    for (double t : points_) {
        if (!std::isfinite(t) || t <= prev) {
            throw DomainError("time grid points must be finite, positive and "
                              "strictly increasing");
        }
        prev = t;
    }
}

} // namespace fedsurv

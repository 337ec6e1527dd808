#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedsurv/errors.hpp"

namespace fedsurv {

// One subject: covariates, observed time, and whether the event was seen
// (event == false means the time is a censoring time).
struct SurvivalRecord {
    std::vector<double> covariates;
    double time = 0.0;
    bool event = false;
};

// Throws DomainError unless time is finite and nonnegative and the
// covariate vector has the expected length.
void validate_record(const SurvivalRecord& record, std::size_t num_covariates);

// Checks times only; covariate lengths are validated against records.front().
void validate_records(std::span<const SurvivalRecord> records);

// Evaluation time points, strictly increasing and positive.
class TimeGrid {
  public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> points);

    const std::vector<double>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    double operator[](std::size_t j) const { return points_[j]; }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

  private:
    std::vector<double> points_;
};

} // namespace fedsurv

#pragma once

#include <span>

#include "fedsurv/matrix.hpp"
#include "fedsurv/survival.hpp"
#include "fedsurv/types.hpp"

namespace fedsurv {

// Predicted survival probabilities, one row per subject, one column per
// grid point. Entries must lie in [0, 1].
struct PredictedCurves {
    TimeGrid grid;
    Matrix survival; // n x m

    void validate() const;
};

// Step interpolation: the value at the largest grid point <= time, 1 before
// the first grid point, the last value beyond the grid.
double curve_at(const PredictedCurves& curves, std::size_t subject, double time);

// Time-dependent concordance over pairs (i, j) with Y_i < Y_j and an
// observed event for i; predictions compared at Y_i, ties worth one half.
double td_cindex(const PredictedCurves& curves,
                 std::span<const SurvivalRecord> records);

// Brier score at grid time t with inverse-probability-of-censoring weights
// from censor_curve. Subjects censored at or before t contribute nothing.
double brier_ipcw(const PredictedCurves& curves,
                  std::span<const SurvivalRecord> records,
                  const KMCurve& censor_curve, double t);

// Trapezoidal mean of per-grid-point values, normalized by the grid span.
double trapezoid_mean(const TimeGrid& grid, std::span<const double> values);

// IPCW Brier score integrated over the curve grid (needs >= 2 grid points).
// The censoring curve is estimated from the same records.
double integrated_brier(const PredictedCurves& curves,
                        std::span<const SurvivalRecord> records);

} // namespace fedsurv

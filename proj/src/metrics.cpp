#include "fedsurv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fedsurv/errors.hpp"

namespace fedsurv {

namespace {

constexpr double kCensorWeightFloor = 1e-6;

// Index of the largest grid point <= time, or -1 when time precedes the grid.
std::ptrdiff_t step_index(const std::vector<double>& points, double time) {
    const auto it = std::upper_bound(points.begin(), points.end(), time);
    return (it - points.begin()) - 1;
}

double step_value(const std::vector<double>& points, std::span<const double> values,
                  double time) {
    const std::ptrdiff_t idx = step_index(points, time);
    if (idx < 0) return 1.0;
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(idx),
                                                values.size() - 1);
    return values[j];
}

std::size_t grid_point_index(const TimeGrid& grid, double t) {
    const auto& pts = grid.points();
    const auto it = std::lower_bound(pts.begin(), pts.end(), t);
    if (it == pts.end() || *it != t) {
        throw DomainError("evaluation time " + std::to_string(t) +
                          " is not a grid point");
    }
    return static_cast<std::size_t>(it - pts.begin());
}

double clipped(double g) { return std::max(g, kCensorWeightFloor); }

} // namespace

void PredictedCurves::validate() const {
    if (survival.cols != grid.size()) {
        throw DomainError("predicted curves must have one column per grid point");
    }
    for (double s : survival.data) {
        if (!(s >= 0.0 && s <= 1.0)) {
            throw DomainError("predicted survival probabilities must lie in [0, 1]");
        }
    }
}

double curve_at(const PredictedCurves& curves, std::size_t subject, double time) {
    if (time < 0.0 || !std::isfinite(time)) {
        throw DomainError("evaluation time must be finite and nonnegative");
    }
    return step_value(curves.grid.points(), curves.survival.row(subject), time);
}

double td_cindex(const PredictedCurves& curves,
                 std::span<const SurvivalRecord> records) {
    if (records.size() != curves.survival.rows) {
        throw DomainError("curve rows must align with records");
    }
    const std::size_t n = records.size();
    const std::size_t m = curves.grid.size();
    // Precompute each subject's step column at its own observed time.
    std::vector<std::size_t> col(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::ptrdiff_t idx = step_index(curves.grid.points(), records[i].time);
        col[i] = idx < 0 ? m : std::min<std::size_t>(static_cast<std::size_t>(idx), m - 1);
    }
    double concordant = 0.0;
    std::uint64_t comparable = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!records[i].event) continue;
        const double yi = records[i].time;
        const std::size_t c = col[i];
        const double si = c == m ? 1.0 : curves.survival.at(i, c);
        for (std::size_t j = 0; j < n; ++j) {
            if (records[j].time <= yi) continue;
            const double sj = c == m ? 1.0 : curves.survival.at(j, c);
            ++comparable;
            if (si < sj) {
                concordant += 1.0;
            } else if (si == sj) {
                concordant += 0.5;
            }
        }
    }
    if (comparable == 0) {
        throw MetricError("concordance is undefined: no comparable pairs");
    }
    return concordant / static_cast<double>(comparable);
}

double brier_ipcw(const PredictedCurves& curves,
                  std::span<const SurvivalRecord> records,
                  const KMCurve& censor_curve, double t) {
    if (records.size() != curves.survival.rows) {
        throw DomainError("curve rows must align with records");
    }
    if (censor_curve.grid != curves.grid) {
        throw DomainError("censoring curve must share the evaluation grid");
    }
    const std::size_t jt = grid_point_index(curves.grid, t);
    const double g_at_t = clipped(censor_curve.survival[jt]);
    double total = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SurvivalRecord& rec = records[i];
        const double s = curves.survival.at(i, jt);
        if (rec.time > t) {
            total += (1.0 - s) * (1.0 - s) / g_at_t;
        } else if (rec.event) {
            // G just before the subject's time: the value one grid point
            // before its bin, 1 at the left edge of the grid.
            const auto bin = bin_index(rec.time, curves.grid);
            const double g_before =
                (!bin || *bin == 0) ? 1.0 : clipped(censor_curve.survival[*bin - 1]);
            total += s * s / g_before;
        }
        // censored at or before t: no contribution
    }
    return total / static_cast<double>(records.size());
}

double trapezoid_mean(const TimeGrid& grid, std::span<const double> values) {
    if (grid.size() < 2) {
        throw DomainError("trapezoidal integration needs at least two grid points");
    }
    if (values.size() != grid.size()) {
        throw DomainError("one value per grid point required");
    }
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        integral += 0.5 * (values[j] + values[j + 1]) * (grid[j + 1] - grid[j]);
    }
    return integral / (grid[grid.size() - 1] - grid[0]);
}

double integrated_brier(const PredictedCurves& curves,
                        std::span<const SurvivalRecord> records) {
    if (curves.grid.size() < 2) {
        throw DomainError("integrated Brier score needs at least two grid points");
    }
    const KMCurve censor = censoring_km(records, curves.grid);
    std::vector<double> bs(curves.grid.size());
    for (std::size_t j = 0; j < curves.grid.size(); ++j) {
        bs[j] = brier_ipcw(curves, records, censor, curves.grid[j]);
    }
    return trapezoid_mean(curves.grid, bs);
}

} // namespace fedsurv

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedsurv/matrix.hpp"
#include "fedsurv/types.hpp"

namespace fedsurv {

// Per-bin aggregate counts: the only statistic a client ever shares.
// Bin j covers the half-open interval (t_{j-1}, t_j] with t_0 = 0.
// Records with time beyond the last grid point count toward
// at_risk_initial only.
struct PartialMatrix {
    TimeGrid grid;
    std::uint64_t at_risk_initial = 0;
    std::vector<std::uint64_t> events;   // d_j per bin
    std::vector<std::uint64_t> censored; // c_j per bin

    // Throws DomainError if lengths or the at-risk recursion do not reconcile.
    void validate() const;

    // r_j for every bin via r_j = r_{j-1} - d_{j-1} - c_{j-1}.
    std::vector<std::uint64_t> at_risk() const;

    friend bool operator==(const PartialMatrix&, const PartialMatrix&) = default;
};

// Product-limit survival estimate over the grid points.
struct KMCurve {
    TimeGrid grid;
    std::vector<double> survival;
};

// Per-subject, per-grid-point jackknife pseudo values. Rows follow the
// client record order. Entries may fall outside [0, 1].
struct PseudoValueMatrix {
    TimeGrid grid;
    Matrix values; // n_k x m
};

// Index of the bin containing `time` (0-based), or nullopt when time lies
// beyond the last grid point. Time 0 maps to the first bin.
std::optional<std::size_t> bin_index(double time, const TimeGrid& grid);

PartialMatrix build_partial_matrix(std::span<const SurvivalRecord> records,
                                   const TimeGrid& grid);

// Elementwise sum; all inputs must share one grid.
PartialMatrix aggregate_partial_matrices(std::span<const PartialMatrix> matrices);

// Product-limit estimate from aggregate counts. Bins with an empty risk
// set contribute a factor of one, freezing the curve at its last value.
KMCurve km_from_partial_matrix(const PartialMatrix& matrix);

// Removes one subject's counts: the initial risk set shrinks by one and,
// when the record falls inside the grid, the event or censoring count of
// its bin drops by one.
PartialMatrix leave_one_out_matrix(const PartialMatrix& global_matrix,
                                   const SurvivalRecord& record);

// Jackknife pseudo values J_i(t) = N * S(t) - (N - 1) * S_loo_i(t) for every
// client record against the global aggregate counts. total_n must equal the
// global matrix's initial risk set.
PseudoValueMatrix pseudo_values(const PartialMatrix& global_matrix,
                                std::span<const SurvivalRecord> client_records,
                                std::uint64_t total_n);

// Product-limit estimate of the censoring distribution: the same pipeline
// with the event indicator negated.
KMCurve censoring_km(std::span<const SurvivalRecord> records, const TimeGrid& grid);

} // namespace fedsurv

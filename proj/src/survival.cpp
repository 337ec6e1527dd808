#include "fedsurv/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedsurv/errors.hpp"

namespace fedsurv {

namespace {

// Running product of count ratios, kept as an exactly reduced uint64
// fraction while it fits. Exactness matters: with complete data the
// jackknife algebra telescopes to 0/1 indicators, and keeping the curve
// rational until the final division preserves that identity bitwise.
struct RatioProduct {
    std::uint64_t num = 1;
    std::uint64_t den = 1;
    bool exact = true;
    double approx = 1.0;

    void multiply(std::uint64_t a, std::uint64_t b) {
        if (!exact) {
            approx *= static_cast<double>(a) / static_cast<double>(b);
            return;
        }
        if (a == 0) {
            num = 0;
            den = 1;
            return;
        }
        const std::uint64_t g0 = std::gcd(a, b);
        a /= g0;
        b /= g0;
        const std::uint64_t g1 = std::gcd(a, den);
        a /= g1;
        den /= g1;
        const std::uint64_t g2 = std::gcd(num, b);
        num /= g2;
        b /= g2;
        if (num > std::numeric_limits<std::uint64_t>::max() / a ||
            den > std::numeric_limits<std::uint64_t>::max() / b) {
            approx = value() * (static_cast<double>(a) / static_cast<double>(b));
            exact = false;
            return;
        }
        num *= a;
        den *= b;
    }

    double value() const {
        if (!exact) return approx;
        return static_cast<double>(num) / static_cast<double>(den);
    }
};

std::vector<RatioProduct> km_ratios(const PartialMatrix& matrix) {
    const std::vector<std::uint64_t> risk = matrix.at_risk();
    std::vector<RatioProduct> out(matrix.grid.size());
    RatioProduct running;
    for (std::size_t j = 0; j < matrix.grid.size(); ++j) {
        if (risk[j] > 0) running.multiply(risk[j] - matrix.events[j], risk[j]);
        out[j] = running;
    }
    return out;
}

std::size_t bin_index_unchecked(double time, const std::vector<double>& points) {
    // First grid point >= time; time 0 lands in the first bin.
    return static_cast<std::size_t>(
        std::lower_bound(points.begin(), points.end(), time) - points.begin());
}

} // namespace

void PartialMatrix::validate() const {
    const std::size_t m = grid.size();
    if (m == 0) throw DomainError("partial matrix needs a non-empty grid");
    if (events.size() != m || censored.size() != m) {
        throw DomainError("partial matrix count vectors must match the grid length");
    }
    std::uint64_t risk = at_risk_initial;
    for (std::size_t j = 0; j < m; ++j) {
        const std::uint64_t leaving = events[j] + censored[j];
        if (leaving > risk) {
            throw DomainError("partial matrix bin " + std::to_string(j + 1) +
                              " removes more subjects than remain at risk");
        }
        risk -= leaving;
    }
}

std::vector<std::uint64_t> PartialMatrix::at_risk() const {
    std::vector<std::uint64_t> risk(grid.size());
    std::uint64_t r = at_risk_initial;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        risk[j] = r;
        r -= events[j] + censored[j];
    }
    return risk;
}

std::optional<std::size_t> bin_index(double time, const TimeGrid& grid) {
    if (!std::isfinite(time) || time < 0.0) {
        throw DomainError("time must be finite and nonnegative");
    }
    if (grid.empty()) throw DomainError("time grid must hold at least one point");
    const std::size_t j = bin_index_unchecked(time, grid.points());
    if (j == grid.size()) return std::nullopt;
    return j;
}

PartialMatrix build_partial_matrix(std::span<const SurvivalRecord> records,
                                   const TimeGrid& grid) {
    if (records.empty()) {
        throw DomainError("cannot build a partial matrix from zero records");
    }
    if (grid.empty()) throw DomainError("time grid must hold at least one point");
    PartialMatrix matrix;
    matrix.grid = grid;
    matrix.at_risk_initial = records.size();
    matrix.events.assign(grid.size(), 0);
    matrix.censored.assign(grid.size(), 0);
    for (const auto& record : records) {
        if (!std::isfinite(record.time) || record.time < 0.0) {
            throw DomainError("record time must be finite and nonnegative");
        }
        const std::size_t j = bin_index_unchecked(record.time, grid.points());
        if (j == grid.size()) continue; // beyond the grid: risk set only
        if (record.event) {
            ++matrix.events[j];
        } else {
            ++matrix.censored[j];
        }
    }
    return matrix;
}

PartialMatrix aggregate_partial_matrices(std::span<const PartialMatrix> matrices) {
    if (matrices.empty()) {
        throw DomainError("cannot aggregate an empty list of partial matrices");
    }
    PartialMatrix total = matrices.front();
    for (std::size_t k = 1; k < matrices.size(); ++k) {
        const PartialMatrix& m = matrices[k];
        if (m.grid != total.grid) {
            throw ProtocolError("partial matrices disagree on the time grid");
        }
        total.at_risk_initial += m.at_risk_initial;
        for (std::size_t j = 0; j < total.events.size(); ++j) {
            total.events[j] += m.events[j];
            total.censored[j] += m.censored[j];
        }
    }
    return total;
}

KMCurve km_from_partial_matrix(const PartialMatrix& matrix) {
    matrix.validate();
    const auto ratios = km_ratios(matrix);
    KMCurve curve;
    curve.grid = matrix.grid;
    curve.survival.resize(ratios.size());
    for (std::size_t j = 0; j < ratios.size(); ++j) {
        curve.survival[j] = ratios[j].value();
    }
    return curve;
}

PartialMatrix leave_one_out_matrix(const PartialMatrix& global_matrix,
                                   const SurvivalRecord& record) {
    if (global_matrix.at_risk_initial == 0) {
        throw ProtocolError("cannot remove a record from an empty matrix");
    }
    PartialMatrix out = global_matrix;
    out.at_risk_initial -= 1;
    const auto j = bin_index(record.time, global_matrix.grid);
    if (!j) return out; // beyond the grid: only the risk set shrinks
    std::vector<std::uint64_t>& counts = record.event ? out.events : out.censored;
    if (counts[*j] == 0) {
        throw ProtocolError("record is not represented in the partial matrix");
    }
    counts[*j] -= 1;
    return out;
}

PseudoValueMatrix pseudo_values(const PartialMatrix& global_matrix,
                                std::span<const SurvivalRecord> client_records,
                                std::uint64_t total_n) {
    if (total_n != global_matrix.at_risk_initial) {
        throw ProtocolError("total subject count does not match the global matrix");
    }
    global_matrix.validate();
    const std::size_t m = global_matrix.grid.size();
    const auto global_ratios = km_ratios(global_matrix);
    const double n = static_cast<double>(total_n);

    PseudoValueMatrix out;
    out.grid = global_matrix.grid;
    out.values = Matrix(client_records.size(), m);
    for (std::size_t i = 0; i < client_records.size(); ++i) {
        const PartialMatrix loo = leave_one_out_matrix(global_matrix, client_records[i]);
        const auto loo_ratios = km_ratios(loo);
        for (std::size_t j = 0; j < m; ++j) {
            const RatioProduct& s = global_ratios[j];
            const RatioProduct& s_loo = loo_ratios[j];
            // num <= den for both curves, so 2^42 bounds keep every product
            // below 2^126.
            constexpr std::uint64_t kExactLimit = 1ULL << 42;
            double value;
            if (s.exact && s_loo.exact && total_n < kExactLimit &&
                s.den < kExactLimit && s_loo.den < kExactLimit) {
                // J = (N * a/b) - ((N - 1) * a'/b') evaluated as one exact
                // fraction; keeps the complete-data 0/1 identity bitwise.
                const __int128 numer =
                    static_cast<__int128>(total_n) * s.num * s_loo.den -
                    static_cast<__int128>(total_n - 1) * s_loo.num * s.den;
                const __int128 denom = static_cast<__int128>(s.den) * s_loo.den;
                value = static_cast<double>(numer) / static_cast<double>(denom);
            } else {
                value = n * s.value() - (n - 1.0) * s_loo.value();
            }
            out.values.at(i, j) = value;
        }
    }
    return out;
}

KMCurve censoring_km(std::span<const SurvivalRecord> records, const TimeGrid& grid) {
    std::vector<SurvivalRecord> flipped(records.begin(), records.end());
    for (auto& r : flipped) r.event = !r.event;
    return km_from_partial_matrix(build_partial_matrix(flipped, grid));
}

} // namespace fedsurv

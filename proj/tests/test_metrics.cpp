#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedsurv/errors.hpp"
#include "fedsurv/metrics.hpp"
#include "test_util.hpp"

using namespace fedsurv;
using namespace fedsurv::testutil;

namespace {

PredictedCurves make_curves(std::vector<double> grid,
                            std::vector<std::vector<double>> rows) {
    PredictedCurves curves;
    curves.grid = TimeGrid(std::move(grid));
    curves.survival = Matrix(rows.size(), curves.grid.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < curves.grid.size(); ++j) {
            curves.survival.at(i, j) = rows[i][j];
        }
    }
    curves.validate();
    return curves;
}

PredictedCurves random_curves(std::mt19937_64& gen, const std::vector<double>& grid,
                              std::size_t n) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(grid.size()));
    for (auto& row : rows) {
        for (double& v : row) v = rng::uniform01(gen);
    }
    return make_curves(grid, rows);
}

// Pair enumeration straight from the definition.
double oracle_cindex(const PredictedCurves& curves,
                     std::span<const SurvivalRecord> records) {
    double concordant = 0.0;
    double comparable = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = 0; j < records.size(); ++j) {
            if (!records[i].event || !(records[i].time < records[j].time)) continue;
            comparable += 1.0;
            const double si = curve_at(curves, i, records[i].time);
            const double sj = curve_at(curves, j, records[i].time);
            if (si < sj) concordant += 1.0;
            if (si == sj) concordant += 0.5;
        }
    }
    return concordant / comparable;
}

// Per-subject summation straight from the weighted Brier definition.
double oracle_brier(const PredictedCurves& curves,
                    std::span<const SurvivalRecord> records,
                    const KMCurve& censor, double t, std::size_t jt) {
    double total = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double s = curves.survival.at(i, jt);
        if (records[i].time > t) {
            total += (1.0 - s) * (1.0 - s) / std::max(censor.survival[jt], 1e-6);
        } else if (records[i].event) {
            const auto bin = bin_index(records[i].time, curves.grid);
            const double g =
                (!bin || *bin == 0)
                    ? 1.0
                    : std::max(censor.survival[*bin - 1], 1e-6);
            total += s * s / g;
        }
    }
    return total / static_cast<double>(records.size());
}

} // namespace

TEST_CASE("curve_at steps between grid points") {
    const PredictedCurves curves = make_curves({1, 2}, {{0.8, 0.4}});
    CHECK(curve_at(curves, 0, 1.5) == 0.8);
    CHECK(curve_at(curves, 0, 0.5) == 1.0);
    CHECK(curve_at(curves, 0, 3.0) == 0.4);
    CHECK(curve_at(curves, 0, 1.0) == 0.8);
    CHECK(curve_at(curves, 0, 2.0) == 0.4);
}

TEST_CASE("td_cindex on two-subject examples") {
    const auto records = records_from({1, 2}, {1, 1});
    CHECK(td_cindex(make_curves({1, 2}, {{0.3, 0.2}, {0.8, 0.7}}), records) == 1.0);
    CHECK(td_cindex(make_curves({1, 2}, {{0.8, 0.7}, {0.3, 0.2}}), records) == 0.0);
    CHECK(td_cindex(make_curves({1, 2}, {{0.5, 0.5}, {0.5, 0.5}}), records) == 0.5);
}

TEST_CASE("td_cindex is undefined without comparable pairs") {
    const auto censored = records_from({1, 2}, {0, 0});
    CHECK_THROWS_AS((void)td_cindex(make_curves({1, 2}, {{0.5, 0.5}, {0.5, 0.5}}),
                                    censored),
                    MetricError);
}

TEST_CASE("td_cindex matches the pair-enumeration oracle exactly") {
    auto gen = rng::make_stream(31, rng::Stream::kDataGen);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(rng::bounded(gen, 45));
        const auto records = random_records(gen, n, 0.3);
        const auto grid = random_grid(gen, 4, 9.0);
        const PredictedCurves curves = random_curves(gen, grid, n);
        CHECK(td_cindex(curves, records) == oracle_cindex(curves, records));
    }
}

TEST_CASE("td_cindex is a rank statistic") {
    auto gen = rng::make_stream(37, rng::Stream::kDataGen);
    const std::size_t n = 30;
    const auto records = random_records(gen, n, 0.2);
    const auto grid = random_grid(gen, 3, 9.0);
    const PredictedCurves curves = random_curves(gen, grid, n);
    const double base = td_cindex(curves, records);

    PredictedCurves squared = curves;
    for (double& v : squared.survival.data) v = v * v; // strictly monotone on [0,1]
    CHECK(td_cindex(squared, records) == base);

    PredictedCurves reversed = curves;
    for (double& v : reversed.survival.data) v = 1.0 - v;
    CHECK(td_cindex(reversed, records) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("random predictions concentrate at one half") {
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        auto gen = rng::make_stream(1000 + s, rng::Stream::kDataGen);
        const auto records = random_records(gen, 200, 0.0);
        const auto grid = random_grid(gen, 5, 9.0);
        total += td_cindex(random_curves(gen, grid, 200), records);
    }
    CHECK(total / seeds == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(total / seeds - 0.5) <= 0.05);
}

TEST_CASE("brier_ipcw hand example") {
    const auto records = records_from({2, 3, 5}, {1, 0, 1});
    const PredictedCurves curves = make_curves(
        {2, 3, 5}, {{0.2, 0.1, 0.1}, {0.9, 0.8, 0.7}, {0.9, 0.8, 0.7}});
    const KMCurve censor = censoring_km(records, curves.grid);
    CHECK(brier_ipcw(curves, records, censor, 2.0) ==
          doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("brier_ipcw with perfect and constant predictions") {
    auto gen = rng::make_stream(41, rng::Stream::kDataGen);
    const auto records = random_records(gen, 40, 0.0);
    const std::vector<double> grid{1.0, 3.0, 5.0};
    std::vector<std::vector<double>> oracle_rows;
    std::vector<std::vector<double>> constant_rows;
    for (const auto& r : records) {
        std::vector<double> row;
        for (double t : grid) row.push_back(r.time > t ? 1.0 : 0.0);
        oracle_rows.push_back(row);
        constant_rows.push_back({0.5, 0.5, 0.5});
    }
    const PredictedCurves oracle = make_curves(grid, oracle_rows);
    const PredictedCurves constant = make_curves(grid, constant_rows);
    const KMCurve censor = censoring_km(records, oracle.grid);
    for (double t : grid) {
        CHECK(brier_ipcw(oracle, records, censor, t) == 0.0);
        CHECK(brier_ipcw(constant, records, censor, t) == 0.25);
    }
    CHECK(integrated_brier(constant, records) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(integrated_brier(oracle, records) == 0.0);
}

TEST_CASE("brier_ipcw reduces to MSE without censoring") {
    auto gen = rng::make_stream(43, rng::Stream::kDataGen);
    const auto records = random_records(gen, 50, 0.0);
    const auto grid = random_grid(gen, 4, 9.0);
    const PredictedCurves curves = random_curves(gen, grid, 50);
    const KMCurve censor = censoring_km(records, curves.grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double mse = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const double label = records[i].time > grid[j] ? 1.0 : 0.0;
            const double diff = label - curves.survival.at(i, j);
            mse += diff * diff;
        }
        mse /= static_cast<double>(records.size());
        CHECK(brier_ipcw(curves, records, censor, grid[j]) ==
              doctest::Approx(mse).epsilon(1e-14));
    }
}

TEST_CASE("brier_ipcw matches the per-subject oracle under censoring") {
    auto gen = rng::make_stream(47, rng::Stream::kDataGen);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 10 + static_cast<std::size_t>(rng::bounded(gen, 40));
        const auto records = random_records(gen, n, 0.5);
        const auto grid = random_grid(gen, 5, 9.0);
        const PredictedCurves curves = random_curves(gen, grid, n);
        const KMCurve censor = censoring_km(records, curves.grid);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            CHECK(brier_ipcw(curves, records, censor, grid[j]) ==
                  doctest::Approx(oracle_brier(curves, records, censor, grid[j], j))
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("censoring weights are floored, never divided by zero") {
    const auto records = records_from({3.0}, {1});
    const PredictedCurves curves = make_curves({1, 2, 3}, {{0.5, 0.5, 0.5}});
    KMCurve censor;
    censor.grid = curves.grid;
    censor.survival = {0.0, 0.0, 0.0};
    const double bs = brier_ipcw(curves, records, censor, 2.0);
    CHECK(std::isfinite(bs));
    CHECK(bs == doctest::Approx(0.25 / 1e-6).epsilon(1e-9));
}

TEST_CASE("trapezoid_mean normalizes by the grid span") {
    CHECK(trapezoid_mean(TimeGrid({1, 2, 3}), std::vector<double>{0.2, 0.2, 0.2}) ==
          doctest::Approx(0.2).epsilon(1e-15));
    CHECK(trapezoid_mean(TimeGrid({1, 2, 3}), std::vector<double>{0.0, 0.1, 0.2}) ==
          doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_AS((void)trapezoid_mean(TimeGrid({1.0}), std::vector<double>{0.1}),
                    DomainError);
}

TEST_CASE("integrated_brier needs at least two grid points") {
    const auto records = records_from({1, 2}, {1, 1});
    const PredictedCurves curves = make_curves({1}, {{0.5}, {0.5}});
    CHECK_THROWS_AS((void)integrated_brier(curves, records), DomainError);
}

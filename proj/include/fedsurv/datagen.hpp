#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedsurv/types.hpp"

namespace fedsurv {

struct SynthConfig {
    std::size_t n = 20000;
    std::size_t p = 12;
    double mu = 0.0;
    double sigma = 1.0;
    double weibull_scale = 0.1; // lambda
    double weibull_shape = 2.0; // nu
    double censor_prob = 0.25;
    std::uint64_t seed = 0;

    void validate() const;
};

// Linear coefficients of the canonical risk score:
// beta_q = 0.1 * (-1)^q * (1 + q/12), q = 1..p.
std::vector<double> risk_coefficients(std::size_t p);

// Canonical nonlinear risk: the linear term plus the interactions
// 0.5 x1 x2 - 0.5 x3 x4 and the curvature terms 0.3 x5^2 - 0.3 x6^2
// (each included only when the covariates exist).
double risk_score(std::span<const double> x);

// Inverse-transform Weibull survival time under a proportional-hazards
// risk: T = (-ln u / (scale * exp(risk)))^(1/shape).
double weibull_time(double u, double risk, double scale, double shape);

// Complete-follow-up draws: Gaussian covariates, Weibull times through the
// canonical risk, every record an observed event.
std::vector<SurvivalRecord> generate_uncensored(const SynthConfig& config,
                                                std::mt19937_64& gen);

// Case censoring: each record is independently selected with probability
// censor_prob; a selected record's time shrinks by a Uniform(0,1) factor
// and its event flag clears.
std::vector<SurvivalRecord> apply_case_censoring(std::vector<SurvivalRecord> records,
                                                 double censor_prob,
                                                 std::mt19937_64& gen);

// Uniform shuffle, then equal shards; the remainder is dropped and
// reported through dropped_out when given.
std::vector<std::vector<SurvivalRecord>> partition_iid(
    std::span<const SurvivalRecord> records, std::size_t num_clients,
    std::mt19937_64& gen, std::size_t* dropped_out = nullptr);

// CSV with a header; every column other than the two named ones becomes a
// covariate in header order. Event cells must be 0 or 1, durations finite
// and nonnegative.
std::vector<SurvivalRecord> load_csv(const std::filesystem::path& path,
                                     const std::string& duration_column,
                                     const std::string& event_column);

// Columns f1..fp, duration, event; shortest round-trip reals.
void write_csv(const std::filesystem::path& path,
               std::span<const SurvivalRecord> records);

} // namespace fedsurv

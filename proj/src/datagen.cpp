#include "fedsurv/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "fedsurv/errors.hpp"
#include "fedsurv/io_util.hpp"
#include "fedsurv/rng.hpp"

namespace fedsurv {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        // trim surrounding whitespace
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos
                            ? std::string()
                            : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_double(const std::string& cell, std::size_t row,
                    const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end || cell.empty()) {
        throw IngestionError("row " + std::to_string(row) + ", column '" + column +
                             "': cannot parse '" + cell + "' as a number");
    }
    return value;
}

} // namespace

void SynthConfig::validate() const {
    if (n == 0) throw DomainError("dataset size must be positive");
    if (p == 0) throw DomainError("covariate count must be positive");
    if (!(sigma > 0.0)) throw DomainError("covariate std must be positive");
    if (!(weibull_scale > 0.0)) throw DomainError("Weibull scale must be positive");
    if (!(weibull_shape > 0.0)) throw DomainError("Weibull shape must be positive");
    if (!(censor_prob >= 0.0 && censor_prob <= 1.0)) {
        throw DomainError("censoring probability must lie in [0, 1]");
    }
}

std::vector<double> risk_coefficients(std::size_t p) {
    std::vector<double> beta(p);
    for (std::size_t q = 1; q <= p; ++q) {
        const double sign = (q % 2 == 0) ? 1.0 : -1.0;
        beta[q - 1] = 0.1 * sign * (1.0 + static_cast<double>(q) / 12.0);
    }
    return beta;
}

double risk_score(std::span<const double> x) {
    const std::vector<double> beta = risk_coefficients(x.size());
    double g = 0.0;
    for (std::size_t q = 0; q < x.size(); ++q) g += beta[q] * x[q];
    if (x.size() >= 2) g += 0.5 * x[0] * x[1];
    if (x.size() >= 4) g -= 0.5 * x[2] * x[3];
    if (x.size() >= 5) g += 0.3 * x[4] * x[4];
    if (x.size() >= 6) g -= 0.3 * x[5] * x[5];
    return g;
}

double weibull_time(double u, double risk, double scale, double shape) {
    return std::pow(-std::log(u) / (scale * std::exp(risk)), 1.0 / shape);
}

std::vector<SurvivalRecord> generate_uncensored(const SynthConfig& config,
                                                std::mt19937_64& gen) {
    config.validate();
    std::vector<SurvivalRecord> records(config.n);
    for (auto& record : records) {
        record.covariates.resize(config.p);
        for (double& x : record.covariates) {
            x = config.mu + config.sigma * rng::normal(gen);
        }
        const double u = rng::uniform01(gen);
        record.time = weibull_time(u, risk_score(record.covariates),
                                   config.weibull_scale, config.weibull_shape);
        record.event = true;
    }
    return records;
}

std::vector<SurvivalRecord> apply_case_censoring(std::vector<SurvivalRecord> records,
                                                 double censor_prob,
                                                 std::mt19937_64& gen) {
    if (!(censor_prob >= 0.0 && censor_prob <= 1.0)) {
        throw DomainError("censoring probability must lie in [0, 1]");
    }
    for (auto& record : records) {
        if (!record.event) {
            throw DomainError("case censoring expects complete follow-up input");
        }
        if (rng::uniform01(gen) < censor_prob) {
            record.time *= rng::uniform01(gen);
            record.event = false;
        }
    }
    return records;
}

std::vector<std::vector<SurvivalRecord>> partition_iid(
    std::span<const SurvivalRecord> records, std::size_t num_clients,
    std::mt19937_64& gen, std::size_t* dropped_out) {
    if (num_clients == 0) throw DomainError("need at least one client");
    if (num_clients > records.size()) {
        throw DomainError("more clients than records");
    }
    const std::vector<std::size_t> order = rng::shuffled_indices(records.size(), gen);
    const std::size_t shard = records.size() / num_clients;
    if (dropped_out) *dropped_out = records.size() - shard * num_clients;
    std::vector<std::vector<SurvivalRecord>> shards(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        shards[k].reserve(shard);
        for (std::size_t i = 0; i < shard; ++i) {
            shards[k].push_back(records[order[k * shard + i]]);
        }
    }
    return shards;
}

std::vector<SurvivalRecord> load_csv(const std::filesystem::path& path,
                                     const std::string& duration_column,
                                     const std::string& event_column) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IngestionError(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);

    std::ptrdiff_t duration_idx = -1;
    std::ptrdiff_t event_idx = -1;
    std::vector<std::size_t> covariate_idx;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == duration_column) {
            duration_idx = static_cast<std::ptrdiff_t>(c);
        } else if (header[c] == event_column) {
            event_idx = static_cast<std::ptrdiff_t>(c);
        } else {
            covariate_idx.push_back(c);
        }
    }
    if (duration_idx < 0) {
        throw IngestionError(path.string() + ": missing column '" + duration_column + "'");
    }
    if (event_idx < 0) {
        throw IngestionError(path.string() + ": missing column '" + event_column + "'");
    }

    std::vector<SurvivalRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw IngestionError("row " + std::to_string(row) + ": expected " +
                                 std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        }
        SurvivalRecord record;
        record.time = parse_double(cells[duration_idx], row, duration_column);
        if (!std::isfinite(record.time) || record.time < 0.0) {
            throw IngestionError("row " + std::to_string(row) + ", column '" +
                                 duration_column + "': negative or non-finite duration");
        }
        const double event = parse_double(cells[event_idx], row, event_column);
        if (event != 0.0 && event != 1.0) {
            throw IngestionError("row " + std::to_string(row) + ", column '" +
                                 event_column + "': event must be 0 or 1");
        }
        record.event = event == 1.0;
        record.covariates.reserve(covariate_idx.size());
        for (std::size_t c : covariate_idx) {
            record.covariates.push_back(parse_double(cells[c], row, header[c]));
        }
        records.push_back(std::move(record));
    }
    return records;
}

void write_csv(const std::filesystem::path& path,
               std::span<const SurvivalRecord> records) {
    std::ostringstream out;
    const std::size_t p = records.empty() ? 0 : records.front().covariates.size();
    for (std::size_t q = 1; q <= p; ++q) out << 'f' << q << ',';
    out << "duration,event\n";
    for (const auto& record : records) {
        if (record.covariates.size() != p) {
            throw DomainError("records disagree on covariate count");
        }
        for (double x : record.covariates) out << format_double(x) << ',';
        out << format_double(record.time) << ',' << (record.event ? 1 : 0) << '\n';
    }
    atomic_write_file(path, out.str());
}

} // namespace fedsurv

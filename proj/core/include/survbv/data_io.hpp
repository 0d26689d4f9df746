#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "survbv/harness.hpp"
#include "survbv/survival.hpp"

namespace survbv {

struct DatasetSchema {
    std::string time_column = "time";
    std::string event_column = "status";
    std::vector<std::string> feature_columns;  // empty: every remaining column
};

struct LoadStats {
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;  // rows with a missing value
};

/// Comma-separated, header row required. Empty cells and NA/NaN count as
/// missing and drop the row (complete-case analysis). Event values must be 0
/// or 1.
SurvivalDataset parse_csv(std::istream& in, const DatasetSchema& schema = {}, LoadStats* stats = nullptr);
SurvivalDataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema = {},
                         LoadStats* stats = nullptr);

/// Writes columns time, status, then the features, with round-trip precision.
void write_csv(const SurvivalDataset& data, const std::filesystem::path& path);
void write_csv(const SurvivalDataset& data, std::ostream& out);

/// FNV-1a over feature names, times, events and covariates.
std::uint64_t dataset_hash(const SurvivalDataset& data);

/// Cumulative baseline hazard of the generating model.
struct Baseline {
    enum class Kind { Exponential, Weibull };

    Kind kind = Kind::Exponential;
    double rate = 1.0;   // Exponential: H0(t) = rate * t
    double shape = 1.0;  // Weibull: H0(t) = (t / scale)^shape
    double scale = 1.0;

    static Baseline exponential(double rate) { return {Kind::Exponential, rate, 1.0, 1.0}; }
    static Baseline weibull(double shape, double scale) { return {Kind::Weibull, 1.0, shape, scale}; }
};

struct SyntheticSpec {
    std::size_t n = 0;
    Vector true_beta;
    Baseline baseline;
    double censoring_rate_target = 0.3;
    std::uint64_t seed = 0;
};

struct SyntheticDataset {
    SurvivalDataset data;
    Vector true_beta;
    Vector linear_predictor;
    Vector event_times;      // uncensored failure times
    Vector censoring_times;  // +inf when no censoring
    double censoring_rate = 0.0;  // rate of the exponential censoring distribution
    double realized_censoring = 0.0;
};

/// Standard-normal covariates, proportional-hazards failure times, and
/// independent exponential censoring. The censoring rate is found by
/// bisection so that the expected censored fraction given the drawn failure
/// times equals the target.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

void write_ground_truth(const SyntheticDataset& synthetic, const SyntheticSpec& spec,
                        const std::filesystem::path& path);

/// Provenance recorded next to curves.csv in run_meta.json.
struct RunMetadata {
    std::string dataset_source;
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t events = 0;
    std::uint64_t dataset_hash = 0;
    ProtocolConfig protocol;
};

RunMetadata make_run_metadata(const SurvivalDataset& data, const ProtocolConfig& protocol, std::string source);

/// Writes curves.csv and run_meta.json into out_dir (created if needed).
/// Files are written to temporaries first and renamed, so a failed call
/// leaves no partial output.
void write_curves(const LearningCurve& curve, const RunMetadata& meta, const std::filesystem::path& out_dir);

void write_curves_csv(const LearningCurve& curve, std::ostream& out);

struct CurveRow {
    std::string algorithm;
    std::size_t train_size = 0;
    double expected_error = 0.0;
    double variance = 0.0;
    double bias_plus_noise = 0.0;
    double performance = 0.0;
    std::size_t fit_failures = 0;
};

std::vector<CurveRow> read_curves_csv(std::istream& in);

/// %.10g, with "nan" for missing cells.
std::string format_number(double value);

}  // namespace survbv

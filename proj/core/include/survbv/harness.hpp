#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "survbv/biasvar.hpp"
#include "survbv/cox.hpp"
#include "survbv/cox_path.hpp"
#include "survbv/error.hpp"

namespace survbv {

/// Maps a training set to risk scores on a test set.
using Scorer = std::function<Vector(const SurvivalDataset& training, const SurvivalDataset& test)>;

/// A learning algorithm under comparison.
struct Algorithm {
    enum class Kind { CoxPh, CoxPath, Custom };

    Kind kind = Kind::CoxPh;
    std::string name;
    FitConfig fit;    // CoxPh
    PathConfig path;  // CoxPath
    Scorer scorer;    // Custom

    static Algorithm cox_ph(FitConfig config = {});
    static Algorithm cox_path(PathConfig config = {});
    static Algorithm custom(std::string name, Scorer scorer);
};

struct FitFailure {
    ErrorKind kind;
    std::string message;
};

using ScoreResult = std::variant<Vector, FitFailure>;

/// Trains on `training` and scores `test`. Diverged and DegenerateFold come
/// back as FitFailure; every other error propagates.
ScoreResult fit_and_score(const Algorithm& algorithm, const SurvivalDataset& training, const SurvivalDataset& test);

struct ProgressEvent {
    std::size_t repetition = 0;
    std::size_t train_size = 0;
    std::size_t cells_done = 0;
    std::size_t cells_total = 0;
};

struct ProtocolConfig {
    double test_fraction = 0.20;
    std::size_t replicates_per_size = 20;
    std::size_t repetitions = 10;
    std::vector<std::size_t> training_sizes;  // strictly increasing
    std::vector<Algorithm> algorithms;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    std::size_t min_training_events = 2;
    std::size_t max_redraws = 50;  // consecutive degenerate draws tolerated
    std::function<void(const ProgressEvent&)> on_progress;

    /// Floor of (1 - test_fraction) * n: observations available for training.
    std::size_t pool_size(std::size_t n) const;
    void validate(std::size_t n) const;
};

/// Index sets drawn for one repetition: a test set and, per training size,
/// `replicates_per_size` training subsets of the remaining pool.
struct RepetitionPlan {
    std::vector<std::size_t> test;
    std::vector<std::vector<std::vector<std::size_t>>> training;  // [size][replicate]
    std::size_t redraws = 0;
};

RepetitionPlan plan_repetition(const SurvivalDataset& data, const ProtocolConfig& config, std::size_t repetition);

struct CurvePoint {
    std::string algorithm;
    std::size_t train_size = 0;
    DecompositionReport report;
    std::size_t attempted_fits = 0;   // repetitions * replicates_per_size
    std::size_t fit_failures = 0;
    std::size_t repetitions_used = 0;  // repetitions with >= 2 successful fits
};

struct LearningCurve {
    std::vector<CurvePoint> points;  // grouped by algorithm, then increasing size
    std::size_t redraws = 0;

    const CurvePoint& at(const std::string& algorithm, std::size_t train_size) const;
};

/// Repeated test splits, nested training subsamples, fits, and decomposition.
/// Output depends only on (data, config minus workers/on_progress).
LearningCurve run_protocol(const SurvivalDataset& data, const ProtocolConfig& config);

}  // namespace survbv

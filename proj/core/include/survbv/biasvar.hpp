#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "survbv/survival.hpp"

namespace survbv {

/// A model's verdict on one comparable pair, relative to the observed order.
enum class PairOutcome : std::uint8_t { Correct, Incorrect, Tie };

/// Outcomes of every comparable pair of a fixed test set (rows) under each
/// trained replicate model (columns).
class PairPredictionMatrix {
public:
    explicit PairPredictionMatrix(std::vector<ComparablePair> pairs) : pairs_(std::move(pairs)) {}

    /// Appends one replicate; the column must have one outcome per pair.
    void add_replicate(std::span<const PairOutcome> column);

    std::size_t pair_count() const noexcept { return pairs_.size(); }
    std::size_t replicate_count() const noexcept { return replicates_; }
    const std::vector<ComparablePair>& pairs() const noexcept { return pairs_; }

    PairOutcome at(std::size_t pair, std::size_t replicate) const {
        return outcomes_.at(replicate * pairs_.size() + pair);
    }

private:
    std::vector<ComparablePair> pairs_;
    std::vector<PairOutcome> outcomes_;  // column-major
    std::size_t replicates_ = 0;
};

/// Classifies every pair under each replicate's test-set scores.
PairPredictionMatrix pair_outcomes(std::span<const Vector> scores_per_replicate,
                                   std::vector<ComparablePair> pairs, const SurvivalDataset& data);

struct DecompositionReport {
    double expected_error = 0.0;
    double variance = 0.0;
    double bias_plus_noise = 0.0;
    double performance = 0.0;  // 1 - expected_error
};

/// Per pair, p = (correct + 0.5 * ties) / replicates is the probability the
/// trained model orders the pair correctly; error = 1 - p and
/// variance = 0.5 * (1 - p^2 - (1 - p)^2). Both are averaged over pairs and
/// bias_plus_noise is their difference. Needs at least 2 replicates.
DecompositionReport decompose(const PairPredictionMatrix& matrix);

/// Field-wise mean; bias_plus_noise and performance are re-derived so the
/// identities hold exactly.
DecompositionReport aggregate_reports(std::span<const DecompositionReport> reports);

/// Per-pair terms of the two-class decomposition when the distribution of the
/// true label is known. Arguments are P(true order is "correct") and
/// P(model says "correct"). error = bias_squared + variance + noise.
struct PairTerms {
    double error = 0.0;
    double bias_squared = 0.0;
    double variance = 0.0;
    double noise = 0.0;
};

PairTerms pair_terms(double p_true_correct, double p_model_correct);

}  // namespace survbv

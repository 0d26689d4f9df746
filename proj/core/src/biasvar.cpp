#include "survbv/biasvar.hpp"

#include <cmath>

#include "survbv/error.hpp"

namespace survbv {

void PairPredictionMatrix::add_replicate(std::span<const PairOutcome> column) {
    if (column.size() != pairs_.size()) {
        fail(ErrorKind::DimensionMismatch, "replicate column has " + std::to_string(column.size()) +
                                               " outcomes for " + std::to_string(pairs_.size()) + " pairs");
    }
    outcomes_.insert(outcomes_.end(), column.begin(), column.end());
    ++replicates_;
}

PairPredictionMatrix pair_outcomes(std::span<const Vector> scores_per_replicate, std::vector<ComparablePair> pairs,
                                   const SurvivalDataset& data) {
    if (pairs.empty()) fail(ErrorKind::NoComparablePairs, "pair list is empty");
    for (const auto& pair : pairs) {
        if (pair.earlier >= data.n() || pair.later >= data.n()) {
            fail(ErrorKind::DimensionMismatch, "pair index outside the test set");
        }
        if (!(data.event(pair.earlier) && data.time(pair.earlier) < data.time(pair.later))) {
            fail(ErrorKind::InvalidArgument, "pair is not comparable under the observed data");
        }
    }
    PairPredictionMatrix matrix(std::move(pairs));
    std::vector<PairOutcome> column;
    for (const Vector& scores : scores_per_replicate) {
        if (static_cast<std::size_t>(scores.size()) != data.n()) {
            fail(ErrorKind::DimensionMismatch, "score vector length does not match the test set");
        }
        const auto labels = classify_pairs(scores, matrix.pairs());
        column.clear();
        for (PairLabel label : labels) {
            column.push_back(label == PairLabel::Concordant   ? PairOutcome::Correct
                             : label == PairLabel::Discordant ? PairOutcome::Incorrect
                                                              : PairOutcome::Tie);
        }
        matrix.add_replicate(column);
    }
    return matrix;
}

DecompositionReport decompose(const PairPredictionMatrix& matrix) {
    const std::size_t replicates = matrix.replicate_count();
    if (replicates < 2) {
        fail(ErrorKind::TooFewReplicates, "variance needs at least 2 replicates, got " + std::to_string(replicates));
    }
    const std::size_t pairs = matrix.pair_count();
    if (pairs == 0) fail(ErrorKind::NoComparablePairs, "matrix has no pairs");

    double error_sum = 0.0;
    double variance_sum = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        // Half-credit units keep the tally integral.
        std::size_t half_credits = 0;
        for (std::size_t r = 0; r < replicates; ++r) {
            const PairOutcome o = matrix.at(i, r);
            half_credits += o == PairOutcome::Correct ? 2 : (o == PairOutcome::Tie ? 1 : 0);
        }
        const double p = static_cast<double>(half_credits) / static_cast<double>(2 * replicates);
        error_sum += 1.0 - p;
        variance_sum += 0.5 * (1.0 - (p * p + (1.0 - p) * (1.0 - p)));
    }
    DecompositionReport report;
    report.expected_error = error_sum / static_cast<double>(pairs);
    report.variance = variance_sum / static_cast<double>(pairs);
    report.bias_plus_noise = report.expected_error - report.variance;
    report.performance = 1.0 - report.expected_error;
    return report;
}

DecompositionReport aggregate_reports(std::span<const DecompositionReport> reports) {
    if (reports.empty()) fail(ErrorKind::EmptyInput, "no reports to aggregate");
    double error = 0.0;
    double variance = 0.0;
    for (const auto& r : reports) {
        error += r.expected_error;
        variance += r.variance;
    }
    const auto count = static_cast<double>(reports.size());
    DecompositionReport mean;
    mean.expected_error = error / count;
    mean.variance = variance / count;
    mean.bias_plus_noise = mean.expected_error - mean.variance;
    mean.performance = 1.0 - mean.expected_error;
    return mean;
}

PairTerms pair_terms(double p_true_correct, double p_model_correct) {
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(p_true_correct) || !in_unit(p_model_correct)) {
        fail(ErrorKind::InvalidArgument, "probabilities must lie in [0, 1]");
    }
    const double f1 = p_true_correct, f0 = 1.0 - p_true_correct;
    const double h1 = p_model_correct, h0 = 1.0 - p_model_correct;
    PairTerms t;
    t.error = 1.0 - (f1 * h1 + f0 * h0);
    t.bias_squared = 0.5 * ((f1 - h1) * (f1 - h1) + (f0 - h0) * (f0 - h0));
    t.variance = 0.5 * (1.0 - (h1 * h1 + h0 * h0));
    t.noise = 0.5 * (1.0 - (f1 * f1 + f0 * f0));
    return t;
}

}  // namespace survbv

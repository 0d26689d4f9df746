#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace survbv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One right-censored observation: covariates, positive study time, and an
/// event flag (true = failure observed, false = censored at `time`).
struct Observation {
    Vector covariates;
    double time = 0.0;
    bool event = false;
};

/// Immutable table of n observations over p covariates. Validated on
/// construction: times positive and finite, covariates finite, feature names
/// (if given) one per column.
class SurvivalDataset {
public:
    SurvivalDataset() = default;
    SurvivalDataset(Matrix covariates, Vector times, std::vector<std::uint8_t> events,
                    std::vector<std::string> feature_names = {});

    static SurvivalDataset from_observations(const std::vector<Observation>& observations,
                                             std::vector<std::string> feature_names = {});

    std::size_t n() const noexcept { return static_cast<std::size_t>(times_.size()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }

    const Matrix& covariates() const noexcept { return covariates_; }
    const Vector& times() const noexcept { return times_; }
    const std::vector<std::uint8_t>& events() const noexcept { return events_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    double time(std::size_t i) const { return times_[static_cast<Eigen::Index>(i)]; }
    bool event(std::size_t i) const { return events_[i] != 0; }
    std::size_t event_count() const noexcept { return event_count_; }

    Observation observation(std::size_t i) const;

    /// Rows in the given order (duplicates allowed).
    SurvivalDataset subset(std::span<const std::size_t> rows) const;

    /// Throws NoEvents / InsufficientData unless the dataset can be fitted.
    void require_fittable() const;

private:
    Matrix covariates_;
    Vector times_;
    std::vector<std::uint8_t> events_;
    std::vector<std::string> feature_names_;
    std::size_t event_count_ = 0;
};

/// Ordered pair (earlier, later) with time[earlier] < time[later] and an
/// observed event at `earlier`: the only pairs whose true order is known.
struct ComparablePair {
    std::size_t earlier = 0;
    std::size_t later = 0;
    friend bool operator==(const ComparablePair&, const ComparablePair&) = default;
};

enum class PairLabel : std::uint8_t { Concordant, Discordant, Tie };

struct ConcordanceCounts {
    std::uint64_t concordant = 0;
    std::uint64_t discordant = 0;
    std::uint64_t tied_score = 0;

    std::uint64_t total() const noexcept { return concordant + discordant + tied_score; }
    /// (concordant + 0.5 * ties) / total; throws NoComparablePairs when total is 0.
    double index() const;
};

// Scores are oriented so that a larger score means higher risk, i.e. an
// earlier expected failure. A comparable pair is concordant when
// score[earlier] > score[later].

/// Every comparable pair, lexicographic in (earlier, later). Tied times are
/// never comparable.
std::vector<ComparablePair> enumerate_comparable_pairs(const SurvivalDataset& data);

/// Sort-and-count evaluation in O(n log n).
ConcordanceCounts concordance_counts(const Vector& scores, const SurvivalDataset& data);

double concordance_index(const Vector& scores, const SurvivalDataset& data);

std::vector<PairLabel> classify_pairs(const Vector& scores, std::span<const ComparablePair> pairs);

}  // namespace survbv

#include "survbv/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survbv/error.hpp"

namespace survbv {

SurvivalDataset::SurvivalDataset(Matrix covariates, Vector times, std::vector<std::uint8_t> events,
                                 std::vector<std::string> feature_names)
    : covariates_(std::move(covariates)),
      times_(std::move(times)),
      events_(std::move(events)),
      feature_names_(std::move(feature_names)) {
    const auto n = times_.size();
    if (covariates_.rows() != n || static_cast<Eigen::Index>(events_.size()) != n) {
        fail(ErrorKind::DimensionMismatch, "covariates, times and events must have the same number of rows");
    }
    if (feature_names_.empty()) {
        for (Eigen::Index j = 0; j < covariates_.cols(); ++j) feature_names_.push_back("x" + std::to_string(j + 1));
    } else if (static_cast<Eigen::Index>(feature_names_.size()) != covariates_.cols()) {
        fail(ErrorKind::DimensionMismatch, "one feature name per covariate column is required");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(std::isfinite(times_[i]) && times_[i] > 0.0)) {
            fail(ErrorKind::InvalidArgument, "time at row " + std::to_string(i) + " must be positive and finite");
        }
        if (events_[static_cast<std::size_t>(i)] > 1) {
            fail(ErrorKind::InvalidArgument, "event at row " + std::to_string(i) + " must be 0 or 1");
        }
    }
    if (!covariates_.allFinite()) fail(ErrorKind::InvalidArgument, "covariates must be finite");
    event_count_ = static_cast<std::size_t>(std::count(events_.begin(), events_.end(), std::uint8_t{1}));
}

SurvivalDataset SurvivalDataset::from_observations(const std::vector<Observation>& observations,
                                                   std::vector<std::string> feature_names) {
    const auto n = static_cast<Eigen::Index>(observations.size());
    const Eigen::Index p = observations.empty() ? static_cast<Eigen::Index>(feature_names.size())
                                                : observations.front().covariates.size();
    Matrix x(n, p);
    Vector t(n);
    std::vector<std::uint8_t> e(observations.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& obs = observations[static_cast<std::size_t>(i)];
        if (obs.covariates.size() != p) fail(ErrorKind::DimensionMismatch, "observations differ in covariate count");
        x.row(i) = obs.covariates.transpose();
        t[i] = obs.time;
        e[static_cast<std::size_t>(i)] = obs.event ? 1 : 0;
    }
    return SurvivalDataset(std::move(x), std::move(t), std::move(e), std::move(feature_names));
}

Observation SurvivalDataset::observation(std::size_t i) const {
    const auto row = static_cast<Eigen::Index>(i);
    return Observation{covariates_.row(row).transpose(), times_[row], events_.at(i) != 0};
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> rows) const {
    const auto m = static_cast<Eigen::Index>(rows.size());
    Matrix x(m, covariates_.cols());
    Vector t(m);
    std::vector<std::uint8_t> e(rows.size());
    for (Eigen::Index k = 0; k < m; ++k) {
        const std::size_t i = rows[static_cast<std::size_t>(k)];
        if (i >= n()) fail(ErrorKind::InvalidArgument, "subset row index out of range");
        x.row(k) = covariates_.row(static_cast<Eigen::Index>(i));
        t[k] = times_[static_cast<Eigen::Index>(i)];
        e[static_cast<std::size_t>(k)] = events_[i];
    }
    return SurvivalDataset(std::move(x), std::move(t), std::move(e), feature_names_);
}

void SurvivalDataset::require_fittable() const {
    if (n() == 0) fail(ErrorKind::InsufficientData, "dataset is empty");
    if (event_count_ == 0) fail(ErrorKind::NoEvents, "dataset has no observed events");
}

double ConcordanceCounts::index() const {
    const std::uint64_t all = total();
    if (all == 0) fail(ErrorKind::NoComparablePairs, "no comparable pairs");
    return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied_score)) / static_cast<double>(all);
}

std::vector<ComparablePair> enumerate_comparable_pairs(const SurvivalDataset& data) {
    std::vector<ComparablePair> pairs;
    const std::size_t n = data.n();
    for (std::size_t i = 0; i < n; ++i) {
        if (!data.event(i)) continue;
        const double ti = data.time(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (ti < data.time(j)) pairs.push_back({i, j});
        }
    }
    return pairs;
}

namespace {

// Fenwick tree of counts over score ranks.
class RankCounter {
public:
    explicit RankCounter(std::size_t size) : tree_(size + 1, 0) {}

    void add(std::size_t rank) {
        for (std::size_t k = rank + 1; k < tree_.size(); k += k & (~k + 1)) ++tree_[k];
    }

    // Number of inserted ranks strictly below `rank`.
    std::uint64_t below(std::size_t rank) const {
        std::uint64_t s = 0;
        for (std::size_t k = rank; k > 0; k -= k & (~k + 1)) s += tree_[k];
        return s;
    }

private:
    std::vector<std::uint64_t> tree_;
};

}  // namespace

ConcordanceCounts concordance_counts(const Vector& scores, const SurvivalDataset& data) {
    const std::size_t n = data.n();
    if (static_cast<std::size_t>(scores.size()) != n) {
        fail(ErrorKind::DimensionMismatch, "score vector length must equal the number of observations");
    }
    if (!scores.allFinite()) fail(ErrorKind::InvalidArgument, "scores must be finite");

    std::vector<double> distinct(scores.data(), scores.data() + n);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        rank[i] = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), scores[static_cast<Eigen::Index>(i)]) - distinct.begin());
    }

    // Walk observations from the latest time backwards. When a group of equal
    // times is reached, the counter holds exactly the strictly later ones.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.time(a) > data.time(b); });

    RankCounter counter(distinct.size());
    ConcordanceCounts counts;
    std::uint64_t inserted = 0;
    for (std::size_t start = 0; start < n;) {
        std::size_t stop = start;
        while (stop < n && data.time(order[stop]) == data.time(order[start])) ++stop;
        for (std::size_t k = start; k < stop; ++k) {
            const std::size_t i = order[k];
            if (!data.event(i)) continue;
            const std::uint64_t lower = counter.below(rank[i]);
            const std::uint64_t lower_or_equal = counter.below(rank[i] + 1);
            counts.concordant += lower;
            counts.tied_score += lower_or_equal - lower;
            counts.discordant += inserted - lower_or_equal;
        }
        for (std::size_t k = start; k < stop; ++k) counter.add(rank[order[k]]);
        inserted += stop - start;
        start = stop;
    }
    return counts;
}

double concordance_index(const Vector& scores, const SurvivalDataset& data) {
    return concordance_counts(scores, data).index();
}

std::vector<PairLabel> classify_pairs(const Vector& scores, std::span<const ComparablePair> pairs) {
    std::vector<PairLabel> labels;
    labels.reserve(pairs.size());
    const auto n = static_cast<std::size_t>(scores.size());
    for (const auto& pair : pairs) {
        if (pair.earlier >= n || pair.later >= n) fail(ErrorKind::DimensionMismatch, "pair index outside score vector");
        const double a = scores[static_cast<Eigen::Index>(pair.earlier)];
        const double b = scores[static_cast<Eigen::Index>(pair.later)];
        labels.push_back(a > b ? PairLabel::Concordant : (a < b ? PairLabel::Discordant : PairLabel::Tie));
    }
    return labels;
}

}  // namespace survbv

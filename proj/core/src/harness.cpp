#include "survbv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "survbv/random.hpp"

namespace survbv {

Algorithm Algorithm::cox_ph(FitConfig config) {
    Algorithm a;
    a.kind = Kind::CoxPh;
    a.name = "coxph";
    a.fit = config;
    return a;
}

Algorithm Algorithm::cox_path(PathConfig config) {
    Algorithm a;
    a.kind = Kind::CoxPath;
    a.name = "coxpath";
    a.path = std::move(config);
    return a;
}

Algorithm Algorithm::custom(std::string name, Scorer scorer) {
    Algorithm a;
    a.kind = Kind::Custom;
    a.name = std::move(name);
    a.scorer = std::move(scorer);
    return a;
}

ScoreResult fit_and_score(const Algorithm& algorithm, const SurvivalDataset& training, const SurvivalDataset& test) {
    try {
        switch (algorithm.kind) {
            case Algorithm::Kind::CoxPh:
                return risk_scores(fit_cox(training, algorithm.fit), test);
            case Algorithm::Kind::CoxPath:
                return risk_scores(fit_path(training, algorithm.path).selected_beta(), test);
            case Algorithm::Kind::Custom: {
                if (!algorithm.scorer) fail(ErrorKind::InvalidArgument, "custom algorithm has no scorer");
                Vector scores = algorithm.scorer(training, test);
                if (static_cast<std::size_t>(scores.size()) != test.n()) {
                    fail(ErrorKind::DimensionMismatch, "custom scorer returned the wrong number of scores");
                }
                return scores;
            }
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Diverged || e.kind() == ErrorKind::DegenerateFold) {
            return FitFailure{e.kind(), e.what()};
        }
        throw;
    }
    fail(ErrorKind::InvalidArgument, "unknown algorithm kind");
}

std::size_t ProtocolConfig::pool_size(std::size_t n) const {
    return static_cast<std::size_t>(std::floor((1.0 - test_fraction) * static_cast<double>(n)));
}

void ProtocolConfig::validate(std::size_t n) const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail(ErrorKind::InvalidArgument, "test_fraction must lie in (0, 1)");
    if (replicates_per_size < 2) fail(ErrorKind::InvalidArgument, "replicates_per_size must be at least 2");
    if (repetitions < 1) fail(ErrorKind::InvalidArgument, "repetitions must be at least 1");
    if (training_sizes.empty()) fail(ErrorKind::InvalidArgument, "training_sizes must not be empty");
    if (algorithms.empty()) fail(ErrorKind::InvalidArgument, "at least one algorithm is required");
    for (std::size_t i = 0; i < training_sizes.size(); ++i) {
        if (training_sizes[i] < 2) fail(ErrorKind::InvalidArgument, "training sizes must be at least 2");
        if (i > 0 && training_sizes[i] <= training_sizes[i - 1]) {
            fail(ErrorKind::InvalidArgument, "training_sizes must be strictly increasing");
        }
    }
    std::set<std::string> names;
    for (const auto& a : algorithms) {
        if (!names.insert(a.name).second) fail(ErrorKind::InvalidArgument, "duplicate algorithm name '" + a.name + "'");
    }
    const std::size_t pool = pool_size(n);
    if (n - pool < 2) fail(ErrorKind::InsufficientData, "test set would hold fewer than 2 observations");
    if (training_sizes.back() > pool) {
        fail(ErrorKind::InsufficientData, "largest training size " + std::to_string(training_sizes.back()) +
                                              " exceeds the training pool of " + std::to_string(pool));
    }
}

namespace {

constexpr std::uint64_t kTestStream = 0x74657374ULL;
constexpr std::uint64_t kTrainStream = 0x747261696eULL;

bool has_comparable_pair(const SurvivalDataset& data, std::span<const std::size_t> rows) {
    double earliest_event = std::numeric_limits<double>::infinity();
    double latest = -std::numeric_limits<double>::infinity();
    for (std::size_t i : rows) {
        if (data.event(i)) earliest_event = std::min(earliest_event, data.time(i));
        latest = std::max(latest, data.time(i));
    }
    return earliest_event < latest;
}

std::size_t count_events(const SurvivalDataset& data, std::span<const std::size_t> rows) {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](std::size_t i) { return data.event(i); }));
}

template <typename Accept>
std::vector<std::size_t> draw_until(Rng& rng, const std::vector<std::size_t>& pool, std::size_t k,
                                    std::size_t max_redraws, std::size_t& redraws, Accept accept) {
    for (std::size_t attempt = 0;; ++attempt) {
        auto rows = rng.sample_without_replacement(pool, k);
        std::sort(rows.begin(), rows.end());
        if (accept(rows)) return rows;
        if (attempt >= max_redraws) {
            fail(ErrorKind::TooManyDegenerateDraws,
                 std::to_string(max_redraws) + " consecutive draws of size " + std::to_string(k) + " were degenerate");
        }
        ++redraws;
    }
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        next = count;
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

RepetitionPlan plan_repetition(const SurvivalDataset& data, const ProtocolConfig& config, std::size_t repetition) {
    config.validate(data.n());
    const std::size_t n = data.n();
    const std::size_t pool_size = config.pool_size(n);
    const std::uint64_t base = config.master_seed + repetition;

    RepetitionPlan plan;
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;

    Rng test_rng(derive_seed(base, {kTestStream}));
    plan.test = draw_until(test_rng, all, n - pool_size, config.max_redraws, plan.redraws,
                           [&](const std::vector<std::size_t>& rows) { return has_comparable_pair(data, rows); });

    std::vector<std::size_t> pool;
    pool.reserve(pool_size);
    std::set_difference(all.begin(), all.end(), plan.test.begin(), plan.test.end(), std::back_inserter(pool));

    for (std::size_t size : config.training_sizes) {
        auto& replicates = plan.training.emplace_back();
        for (std::size_t k = 0; k < config.replicates_per_size; ++k) {
            Rng rng(derive_seed(base, {kTrainStream, size, k}));
            replicates.push_back(draw_until(rng, pool, size, config.max_redraws, plan.redraws,
                                            [&](const std::vector<std::size_t>& rows) {
                                                return count_events(data, rows) >= config.min_training_events;
                                            }));
        }
    }
    return plan;
}

const CurvePoint& LearningCurve::at(const std::string& algorithm, std::size_t train_size) const {
    for (const auto& point : points) {
        if (point.algorithm == algorithm && point.train_size == train_size) return point;
    }
    fail(ErrorKind::InvalidArgument, "no curve point for " + algorithm + " at size " + std::to_string(train_size));
}

LearningCurve run_protocol(const SurvivalDataset& data, const ProtocolConfig& config) {
    config.validate(data.n());
    const std::size_t sizes = config.training_sizes.size();
    const std::size_t algos = config.algorithms.size();
    const std::size_t replicates = config.replicates_per_size;

    LearningCurve curve;
    std::vector<std::vector<DecompositionReport>> reports(algos * sizes);
    for (const auto& algorithm : config.algorithms) {
        for (std::size_t size : config.training_sizes) {
            CurvePoint point;
            point.algorithm = algorithm.name;
            point.train_size = size;
            point.attempted_fits = config.repetitions * replicates;
            curve.points.push_back(point);
        }
    }

    const std::size_t cells_total = config.repetitions * sizes;
    std::size_t cells_done = 0;
    for (std::size_t r = 0; r < config.repetitions; ++r) {
        const RepetitionPlan plan = plan_repetition(data, config, r);
        curve.redraws += plan.redraws;
        const SurvivalDataset test = data.subset(plan.test);
        const auto pairs = enumerate_comparable_pairs(test);

        for (std::size_t s = 0; s < sizes; ++s) {
            std::vector<ScoreResult> results(replicates * algos);
            parallel_for(results.size(), config.workers, [&](std::size_t job) {
                const std::size_t k = job / algos;
                const std::size_t a = job % algos;
                const SurvivalDataset training = data.subset(plan.training[s][k]);
                results[job] = fit_and_score(config.algorithms[a], training, test);
            });

            for (std::size_t a = 0; a < algos; ++a) {
                auto& point = curve.points[a * sizes + s];
                std::vector<Vector> columns;
                for (std::size_t k = 0; k < replicates; ++k) {
                    auto& result = results[k * algos + a];
                    if (auto* scores = std::get_if<Vector>(&result)) {
                        columns.push_back(std::move(*scores));
                    } else {
                        ++point.fit_failures;
                    }
                }
                if (columns.size() >= 2) {
                    reports[a * sizes + s].push_back(decompose(pair_outcomes(columns, pairs, test)));
                }
            }
            if (config.on_progress) config.on_progress({r, config.training_sizes[s], ++cells_done, cells_total});
        }
    }

    for (std::size_t c = 0; c < curve.points.size(); ++c) {
        auto& point = curve.points[c];
        point.repetitions_used = reports[c].size();
        if (reports[c].empty()) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            point.report = {nan, nan, nan, nan};
        } else {
            point.report = aggregate_reports(reports[c]);
        }
    }
    return curve;
}

}  // namespace survbv

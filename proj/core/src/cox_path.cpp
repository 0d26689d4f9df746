#include "survbv/cox_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "survbv/error.hpp"
#include "survbv/random.hpp"

namespace survbv {

std::string Selection::name() const {
    switch (kind) {
        case Kind::CvDeviance: return "cv_deviance";
        case Kind::CvCIndex: return "cv_cindex";
        case Kind::FixedLambda: return "fixed_lambda";
    }
    return "unknown";
}

double PathConfig::effective_lambda_min_ratio(std::size_t n, std::size_t p) const {
    if (lambda_min_ratio) return *lambda_min_ratio;
    return n > p ? 0.01 : 0.05;
}

void PathConfig::validate() const {
    if (n_lambda < 2) fail(ErrorKind::InvalidArgument, "n_lambda must be at least 2");
    if (lambda_min_ratio && !(*lambda_min_ratio > 0.0 && *lambda_min_ratio < 1.0)) {
        fail(ErrorKind::InvalidArgument, "lambda_min_ratio must lie in (0, 1)");
    }
    if (selection.kind != Selection::Kind::FixedLambda && folds < 2) {
        fail(ErrorKind::InvalidArgument, "cross-validation needs at least 2 folds");
    }
    if (selection.kind == Selection::Kind::FixedLambda &&
        !(selection.fixed_lambda > 0.0 && std::isfinite(selection.fixed_lambda))) {
        fail(ErrorKind::InvalidArgument, "fixed lambda must be positive and finite");
    }
    if (!(cd_tolerance > 0.0)) fail(ErrorKind::InvalidArgument, "cd_tolerance must be positive");
    if (cd_max_passes < 1) fail(ErrorKind::InvalidArgument, "cd_max_passes must be at least 1");
}

namespace {

// Cox likelihood over standardized covariates. Constant columns are zero, so
// their curvature is zero and coordinate descent pins them at 0.
struct StandardizedProblem {
    explicit StandardizedProblem(const SurvivalDataset& data)
        : standardization(Standardization::fit(data.covariates())),
          likelihood(standardization.apply(data.covariates()), data),
          n(static_cast<double>(data.n())) {}

    Standardization standardization;
    PartialLikelihood likelihood;
    double n;
};

double soft_threshold(double u, double lambda) {
    if (u > lambda) return u - lambda;
    if (u < -lambda) return u + lambda;
    return 0.0;
}

double penalized_objective(const StandardizedProblem& problem, const Vector& b, double lambda) {
    return -problem.likelihood.value(b) / problem.n + lambda * b.lpNorm<1>();
}

struct StandardizedFit {
    Vector b;
    std::vector<double> objective;
    std::size_t passes = 0;
};

StandardizedFit solve_l1(const StandardizedProblem& problem, double lambda, Vector b, const PathConfig& config) {
    constexpr double kMinCurvature = 1e-12;
    constexpr int kMaxHalvings = 30;
    const auto p = b.size();

    StandardizedFit fit;
    double f = penalized_objective(problem, b, lambda);
    if (!std::isfinite(f)) fail(ErrorKind::Diverged, "penalized objective is not finite at the starting point");
    fit.objective.push_back(f);

    while (fit.passes < config.cd_max_passes) {
        const auto eval = problem.likelihood.evaluate(b, true);
        if (!eval.gradient.allFinite() || !eval.hessian.allFinite()) {
            fail(ErrorKind::Diverged, "non-finite working response in quadratic approximation");
        }
        const Matrix curvature = -eval.hessian / problem.n;
        // Gradient of the quadratic model at the trial point.
        Vector r = -eval.gradient / problem.n;
        Vector trial = b;

        while (true) {
            double max_change = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                const double a = curvature(j, j);
                double updated = 0.0;
                if (a > kMinCurvature) updated = soft_threshold(a * trial[j] - r[j], lambda) / a;
                const double delta = updated - trial[j];
                if (delta != 0.0) {
                    r.noalias() += delta * curvature.col(j);
                    trial[j] = updated;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            ++fit.passes;
            if (max_change < config.cd_tolerance || fit.passes >= config.cd_max_passes) break;
        }

        const Vector direction = trial - b;
        if (direction.lpNorm<Eigen::Infinity>() == 0.0) break;

        double t = 1.0;
        bool accepted = false;
        Vector candidate;
        double candidate_f = 0.0;
        for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
            candidate = b + t * direction;
            candidate_f = penalized_objective(problem, candidate, lambda);
            if (std::isfinite(candidate_f) && candidate_f <= f) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const double moved = t * direction.lpNorm<Eigen::Infinity>();
        b = std::move(candidate);
        f = candidate_f;
        fit.objective.push_back(f);
        if (moved < config.cd_tolerance) break;
    }
    fit.b = std::move(b);
    return fit;
}

std::size_t count_nonzero(const Vector& beta) {
    return static_cast<std::size_t>((beta.array() != 0.0).count());
}

Matrix fit_grid(const StandardizedProblem& problem, const std::vector<double>& lambdas, const PathConfig& config) {
    const auto p = static_cast<Eigen::Index>(problem.likelihood.p());
    Matrix betas(static_cast<Eigen::Index>(lambdas.size()), p);
    Vector b = Vector::Zero(p);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        b = solve_l1(problem, lambdas[k], std::move(b), config).b;
        betas.row(static_cast<Eigen::Index>(k)) = problem.standardization.to_original(b).transpose();
    }
    return betas;
}

std::size_t best_index(const std::vector<double>& scores, bool minimize) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        // Strict comparison keeps the earliest (largest-lambda) index on ties.
        if (minimize ? scores[k] < scores[best] : scores[k] > scores[best]) best = k;
    }
    return best;
}

std::vector<double> fixed_lambda_distances(const PathSolution& path, double target) {
    std::vector<double> d;
    d.reserve(path.size());
    for (double lambda : path.lambdas) {
        d.push_back(lambda > 0.0 ? std::abs(std::log(lambda / target)) : std::numeric_limits<double>::infinity());
    }
    return d;
}

std::pair<std::size_t, std::vector<double>> score_and_select(const PathSolution& path, const SurvivalDataset& data,
                                                             const PathConfig& config) {
    if (path.size() == 0) fail(ErrorKind::InvalidArgument, "path is empty");
    switch (config.selection.kind) {
        case Selection::Kind::FixedLambda: {
            auto distances = fixed_lambda_distances(path, config.selection.fixed_lambda);
            const std::size_t index =
                config.selection.fixed_lambda >= path.lambdas.front() ? 0 : best_index(distances, true);
            return {index, std::move(distances)};
        }
        case Selection::Kind::CvDeviance:
        case Selection::Kind::CvCIndex: {
            if (path.size() == 1) return {0, std::vector<double>(1, 0.0)};
            auto scores = cross_validation_scores(path, data, config);
            const bool minimize = config.selection.kind == Selection::Kind::CvDeviance;
            return {best_index(scores, minimize), std::move(scores)};
        }
    }
    return {0, {}};
}

}  // namespace

double lambda_max(const SurvivalDataset& data) {
    data.require_fittable();
    const StandardizedProblem problem(data);
    const Vector g = problem.likelihood.evaluate(Vector::Zero(static_cast<Eigen::Index>(data.p())), false).gradient;
    double best = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) best = std::max(best, std::abs(g[j]) / problem.n);
    return best;
}

L1Fit fit_l1_traced(const SurvivalDataset& data, double lambda, const Vector& warm_start, const PathConfig& config) {
    config.validate();
    data.require_fittable();
    if (!(lambda >= 0.0 && std::isfinite(lambda))) fail(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
    if (static_cast<std::size_t>(warm_start.size()) != data.p()) {
        fail(ErrorKind::DimensionMismatch, "warm start length does not match the covariate count");
    }
    const StandardizedProblem problem(data);
    auto fit = solve_l1(problem, lambda, problem.standardization.to_standardized(warm_start), config);
    return L1Fit{problem.standardization.to_original(fit.b), std::move(fit.objective), fit.passes};
}

Vector fit_l1(const SurvivalDataset& data, double lambda, const Vector& warm_start, const PathConfig& config) {
    return fit_l1_traced(data, lambda, warm_start, config).beta;
}

std::vector<std::vector<std::size_t>> stratified_folds(const SurvivalDataset& data, std::size_t folds,
                                                       std::uint64_t seed) {
    if (folds < 2) fail(ErrorKind::InvalidArgument, "need at least 2 folds");
    if (data.n() < folds) {
        fail(ErrorKind::DegenerateFold, "fewer observations (" + std::to_string(data.n()) + ") than folds");
    }
    std::vector<std::size_t> with_event, censored;
    for (std::size_t i = 0; i < data.n(); ++i) (data.event(i) ? with_event : censored).push_back(i);

    Rng rng(derive_seed(seed, {0x666f6c64ULL}));
    with_event = rng.sample_without_replacement(std::move(with_event), with_event.size());
    censored = rng.sample_without_replacement(std::move(censored), censored.size());

    std::vector<std::vector<std::size_t>> out(folds);
    std::size_t slot = 0;
    for (std::size_t i : with_event) out[slot++ % folds].push_back(i);
    for (std::size_t i : censored) out[slot++ % folds].push_back(i);
    for (auto& fold : out) std::sort(fold.begin(), fold.end());
    return out;
}

Matrix fit_lambda_grid(const SurvivalDataset& data, const std::vector<double>& lambdas, const PathConfig& config) {
    config.validate();
    data.require_fittable();
    return fit_grid(StandardizedProblem(data), lambdas, config);
}

std::vector<double> cross_validation_scores(const PathSolution& path, const SurvivalDataset& data,
                                            const PathConfig& config) {
    const auto folds = stratified_folds(data, config.folds, config.seed);
    const std::size_t m = path.size();
    std::vector<double> scores(m, 0.0);
    std::vector<std::size_t> usable(m, 0);
    const bool deviance = config.selection.kind != Selection::Kind::CvCIndex;
    const std::optional<PartialLikelihood> full =
        deviance ? std::optional<PartialLikelihood>(std::in_place, data) : std::nullopt;

    std::vector<bool> held_out(data.n());
    for (std::size_t k = 0; k < folds.size(); ++k) {
        std::fill(held_out.begin(), held_out.end(), false);
        for (std::size_t i : folds[k]) held_out[i] = true;
        std::vector<std::size_t> train_rows;
        for (std::size_t i = 0; i < data.n(); ++i) {
            if (!held_out[i]) train_rows.push_back(i);
        }
        const SurvivalDataset train = data.subset(train_rows);
        if (train.event_count() == 0) {
            fail(ErrorKind::DegenerateFold, "training part of fold " + std::to_string(k) + " has no events");
        }
        const Matrix betas = fit_grid(StandardizedProblem(train), path.lambdas, config);

        if (deviance) {
            const PartialLikelihood train_likelihood(train);
            for (std::size_t l = 0; l < m; ++l) {
                const Vector b = betas.row(static_cast<Eigen::Index>(l)).transpose();
                scores[l] += -2.0 * (full->value(b) - train_likelihood.value(b));
            }
        } else {
            const SurvivalDataset test = data.subset(folds[k]);
            for (std::size_t l = 0; l < m; ++l) {
                const Vector b = betas.row(static_cast<Eigen::Index>(l)).transpose();
                const auto counts = concordance_counts(risk_scores(b, test), test);
                if (counts.total() == 0) continue;
                scores[l] += counts.index();
                ++usable[l];
            }
        }
    }
    if (!deviance) {
        for (std::size_t l = 0; l < m; ++l) {
            if (usable[l] == 0) fail(ErrorKind::DegenerateFold, "no held-out fold has a comparable pair");
            scores[l] /= static_cast<double>(usable[l]);
        }
    }
    return scores;
}

std::size_t select_model(const PathSolution& path, const SurvivalDataset& data, const PathConfig& config) {
    config.validate();
    return score_and_select(path, data, config).first;
}

PathSolution fit_path(const SurvivalDataset& data, const PathConfig& config) {
    config.validate();
    data.require_fittable();
    const StandardizedProblem problem(data);
    const double top = lambda_max(data);

    PathSolution path;
    if (top == 0.0) {
        // Every coefficient is zero for any penalty.
        path.lambdas = {0.0};
    } else {
        const double ratio = config.effective_lambda_min_ratio(data.n(), data.p());
        const auto steps = static_cast<double>(config.n_lambda - 1);
        for (std::size_t k = 0; k < config.n_lambda; ++k) {
            path.lambdas.push_back(k == 0 ? top : top * std::exp(static_cast<double>(k) / steps * std::log(ratio)));
        }
        if (config.selection.kind == Selection::Kind::FixedLambda) {
            const double target = config.selection.fixed_lambda;
            if (target < top && std::find(path.lambdas.begin(), path.lambdas.end(), target) == path.lambdas.end()) {
                const auto at = std::find_if(path.lambdas.begin(), path.lambdas.end(),
                                             [&](double l) { return l < target; });
                path.lambdas.insert(at, target);
            }
        }
    }

    path.betas = fit_grid(problem, path.lambdas, config);
    for (std::size_t k = 0; k < path.size(); ++k) path.nonzero_counts.push_back(count_nonzero(path.beta(k)));
    auto [index, scores] = score_and_select(path, data, config);
    path.selected_index = index;
    path.selection_scores = std::move(scores);
    return path;
}

}  // namespace survbv

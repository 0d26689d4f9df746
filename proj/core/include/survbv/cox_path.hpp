#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "survbv/cox.hpp"

namespace survbv {

/// How fit_path picks one model off the regularization path.
struct Selection {
    enum class Kind { CvDeviance, CvCIndex, FixedLambda };

    Kind kind = Kind::CvDeviance;
    double fixed_lambda = 0.0;  // FixedLambda only

    static Selection cv_deviance() { return {Kind::CvDeviance, 0.0}; }
    static Selection cv_cindex() { return {Kind::CvCIndex, 0.0}; }
    static Selection fixed(double lambda) { return {Kind::FixedLambda, lambda}; }

    std::string name() const;
};

struct PathConfig {
    std::size_t n_lambda = 100;
    /// Smallest lambda as a fraction of lambda_max. Unset means 0.01 when
    /// n > p and 0.05 otherwise.
    std::optional<double> lambda_min_ratio;
    Selection selection;
    std::size_t folds = 5;
    double cd_tolerance = 1e-7;
    std::size_t cd_max_passes = 100000;
    std::uint64_t seed = 0;

    double effective_lambda_min_ratio(std::size_t n, std::size_t p) const;
    void validate() const;
};

/// Fits along a decreasing lambda grid. Coefficients are on the original
/// covariate scale; the penalty applies to standardized coefficients.
struct PathSolution {
    std::vector<double> lambdas;  // strictly decreasing
    Matrix betas;                 // one row per lambda
    std::vector<std::size_t> nonzero_counts;
    std::size_t selected_index = 0;
    std::vector<double> selection_scores;

    std::size_t size() const noexcept { return lambdas.size(); }
    Vector beta(std::size_t k) const { return betas.row(static_cast<Eigen::Index>(k)).transpose(); }
    Vector selected_beta() const { return beta(selected_index); }
    double selected_lambda() const { return lambdas.at(selected_index); }
};

/// Smallest penalty at which the all-zero model is optimal:
/// max_j |g_j(0)| / n on standardized covariates.
double lambda_max(const SurvivalDataset& data);

struct L1Fit {
    Vector beta;                    // original scale
    std::vector<double> objective;  // penalized objective after each outer pass, starting at the warm start
    std::size_t coordinate_passes = 0;
};

/// Minimizes -loglik(beta)/n + lambda * ||beta_std||_1 by cyclic coordinate
/// descent with soft-thresholding on successive quadratic approximations.
/// `warm_start` is on the original scale.
L1Fit fit_l1_traced(const SurvivalDataset& data, double lambda, const Vector& warm_start, const PathConfig& config);
Vector fit_l1(const SurvivalDataset& data, double lambda, const Vector& warm_start, const PathConfig& config);

/// Event-stratified fold assignment: observations with events and censored
/// observations are shuffled separately and dealt round-robin. Returns the
/// held-out indices of each fold (sorted).
std::vector<std::vector<std::size_t>> stratified_folds(const SurvivalDataset& data, std::size_t folds,
                                                       std::uint64_t seed);

/// Warm-started fits of `data` over a given lambda grid.
Matrix fit_lambda_grid(const SurvivalDataset& data, const std::vector<double>& lambdas, const PathConfig& config);

/// Per-lambda cross-validation scores on the path's grid.
/// CvDeviance: -2 * sum over folds of [l_full(b_k) - l_train_k(b_k)], lower is better.
/// CvCIndex: mean held-out concordance over folds with comparable pairs, higher is better.
std::vector<double> cross_validation_scores(const PathSolution& path, const SurvivalDataset& data,
                                            const PathConfig& config);

/// Index chosen by config.selection; ties go to the larger lambda.
std::size_t select_model(const PathSolution& path, const SurvivalDataset& data, const PathConfig& config);

PathSolution fit_path(const SurvivalDataset& data, const PathConfig& config = {});

}  // namespace survbv

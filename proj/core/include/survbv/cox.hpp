#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "survbv/survival.hpp"

namespace survbv {

/// Breslow log partial likelihood of a linear Cox model together with its
/// derivatives. The risk set of an event at time t is every observation with
/// time >= t; tied event times share one denominator.
///
/// Construction sorts the observations once; evaluations are O(n p) for the
/// value and gradient and O(n p^2) with the Hessian. Linear predictors are
/// shifted by their maximum before exponentiation.
class PartialLikelihood {
public:
    explicit PartialLikelihood(const SurvivalDataset& data);
    PartialLikelihood(Matrix covariates, const SurvivalDataset& outcomes);

    struct Evaluation {
        double value = 0.0;
        Vector gradient;
        Matrix hessian;  // empty unless requested
    };

    double value(const Vector& beta) const;
    Evaluation evaluate(const Vector& beta, bool with_hessian) const;

    std::size_t n() const noexcept { return static_cast<std::size_t>(x_.rows()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(x_.cols()); }
    const Matrix& covariates() const noexcept { return x_; }

private:
    void check(const Vector& beta) const;

    Matrix x_;
    std::vector<std::size_t> order_;       // descending time
    std::vector<std::size_t> group_end_;   // exclusive end of each equal-time group in order_
    std::vector<std::uint8_t> events_;
};

double log_partial_likelihood(const Vector& beta, const SurvivalDataset& data);
Vector gradient(const Vector& beta, const SurvivalDataset& data);
Matrix hessian(const Vector& beta, const SurvivalDataset& data);

/// Column centering and scaling to unit (population) variance. Columns whose
/// spread is numerically zero are flagged constant; they are zeroed in the
/// standardized matrix and always receive a zero coefficient.
struct Standardization {
    Vector mean;
    Vector scale;
    std::vector<bool> constant;

    static Standardization fit(const Matrix& x);
    Matrix apply(const Matrix& x) const;
    Vector to_original(const Vector& beta_standardized) const;
    Vector to_standardized(const Vector& beta_original) const;
    std::vector<std::size_t> varying_columns() const;
};

struct FitConfig {
    int max_iterations = 100;
    double tolerance = 1e-9;       // relative change of the log partial likelihood
    double ridge_fallback = 1e-8;  // added to the information matrix only when singular

    void validate() const;
};

struct CoxModel {
    Vector beta;
    bool converged = false;
    int iterations = 0;
    double final_log_partial_likelihood = 0.0;
};

/// Newton-Raphson on standardized covariates with step halving; coefficients
/// are reported on the original covariate scale.
CoxModel fit_cox(const SurvivalDataset& data, const FitConfig& config = {});

/// Linear predictor x_i . beta for every observation.
Vector risk_scores(const Vector& beta, const SurvivalDataset& data);
Vector risk_scores(const CoxModel& model, const SurvivalDataset& data);

}  // namespace survbv

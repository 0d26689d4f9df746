#include "survbv/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survbv/error.hpp"

namespace survbv {

PartialLikelihood::PartialLikelihood(const SurvivalDataset& data) : PartialLikelihood(data.covariates(), data) {}

PartialLikelihood::PartialLikelihood(Matrix covariates, const SurvivalDataset& outcomes)
    : x_(std::move(covariates)), events_(outcomes.events()) {
    outcomes.require_fittable();
    if (static_cast<std::size_t>(x_.rows()) != outcomes.n()) {
        fail(ErrorKind::DimensionMismatch, "covariate rows do not match the number of observations");
    }
    const std::size_t n = outcomes.n();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return outcomes.time(a) > outcomes.time(b); });
    for (std::size_t k = 1; k <= n; ++k) {
        if (k == n || outcomes.time(order_[k]) != outcomes.time(order_[k - 1])) group_end_.push_back(k);
    }
}

void PartialLikelihood::check(const Vector& beta) const {
    if (static_cast<std::size_t>(beta.size()) != p()) {
        fail(ErrorKind::DimensionMismatch, "coefficient vector has length " + std::to_string(beta.size()) +
                                               ", expected " + std::to_string(p()));
    }
}

double PartialLikelihood::value(const Vector& beta) const {
    check(beta);
    const Vector eta = x_ * beta;
    const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;
    double total = 0.0;
    double risk = 0.0;
    std::size_t start = 0;
    for (std::size_t end : group_end_) {
        double event_eta = 0.0;
        std::size_t deaths = 0;
        for (std::size_t k = start; k < end; ++k) {
            const auto i = static_cast<Eigen::Index>(order_[k]);
            risk += std::exp(eta[i] - shift);
            if (events_[order_[k]]) {
                event_eta += eta[i] - shift;
                ++deaths;
            }
        }
        if (deaths > 0) total += event_eta - static_cast<double>(deaths) * std::log(risk);
        start = end;
    }
    return total;
}

PartialLikelihood::Evaluation PartialLikelihood::evaluate(const Vector& beta, bool with_hessian) const {
    check(beta);
    const auto pp = static_cast<Eigen::Index>(p());
    const Vector eta = x_ * beta;
    const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;

    Evaluation out;
    out.gradient = Vector::Zero(pp);
    if (with_hessian) out.hessian = Matrix::Zero(pp, pp);

    double s0 = 0.0;
    Vector s1 = Vector::Zero(pp);
    Matrix s2 = with_hessian ? Matrix::Zero(pp, pp) : Matrix();
    Vector mu(pp);

    std::size_t start = 0;
    for (std::size_t end : group_end_) {
        double event_eta = 0.0;
        std::size_t deaths = 0;
        for (std::size_t k = start; k < end; ++k) {
            const auto i = static_cast<Eigen::Index>(order_[k]);
            const double w = std::exp(eta[i] - shift);
            const auto xi = x_.row(i).transpose();
            s0 += w;
            s1.noalias() += w * xi;
            if (with_hessian) s2.selfadjointView<Eigen::Lower>().rankUpdate(xi, w);
            if (events_[order_[k]]) {
                event_eta += eta[i] - shift;
                out.gradient += xi;
                ++deaths;
            }
        }
        if (deaths > 0) {
            const double d = static_cast<double>(deaths);
            out.value += event_eta - d * std::log(s0);
            mu = s1 / s0;
            out.gradient.noalias() -= d * mu;
            if (with_hessian) {
                out.hessian.triangularView<Eigen::Lower>() -= d * (s2 / s0 - mu * mu.transpose());
            }
        }
        start = end;
    }
    if (with_hessian) out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
    return out;
}

double log_partial_likelihood(const Vector& beta, const SurvivalDataset& data) {
    return PartialLikelihood(data).value(beta);
}

Vector gradient(const Vector& beta, const SurvivalDataset& data) {
    return PartialLikelihood(data).evaluate(beta, false).gradient;
}

Matrix hessian(const Vector& beta, const SurvivalDataset& data) {
    return PartialLikelihood(data).evaluate(beta, true).hessian;
}

Standardization Standardization::fit(const Matrix& x) {
    Standardization s;
    const auto p = x.cols();
    const auto n = static_cast<double>(x.rows());
    s.mean = Vector::Zero(p);
    s.scale = Vector::Ones(p);
    s.constant.assign(static_cast<std::size_t>(p), true);
    if (x.rows() == 0) return s;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double m = x.col(j).mean();
        const double sd = std::sqrt((x.col(j).array() - m).square().sum() / n);
        s.mean[j] = m;
        if (sd > 1e-12 * (1.0 + std::abs(m))) {
            s.scale[j] = sd;
            s.constant[static_cast<std::size_t>(j)] = false;
        }
    }
    return s;
}

Matrix Standardization::apply(const Matrix& x) const {
    Matrix z = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    for (std::size_t j = 0; j < constant.size(); ++j) {
        if (constant[j]) z.col(static_cast<Eigen::Index>(j)).setZero();
    }
    return z;
}

Vector Standardization::to_original(const Vector& beta_standardized) const {
    Vector beta = beta_standardized.array() / scale.array();
    for (std::size_t j = 0; j < constant.size(); ++j) {
        if (constant[j]) beta[static_cast<Eigen::Index>(j)] = 0.0;
    }
    return beta;
}

Vector Standardization::to_standardized(const Vector& beta_original) const {
    Vector beta = beta_original.array() * scale.array();
    for (std::size_t j = 0; j < constant.size(); ++j) {
        if (constant[j]) beta[static_cast<Eigen::Index>(j)] = 0.0;
    }
    return beta;
}

std::vector<std::size_t> Standardization::varying_columns() const {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < constant.size(); ++j) {
        if (!constant[j]) cols.push_back(j);
    }
    return cols;
}

void FitConfig::validate() const {
    if (max_iterations < 1) fail(ErrorKind::InvalidArgument, "max_iterations must be at least 1");
    if (!(tolerance > 0.0)) fail(ErrorKind::InvalidArgument, "tolerance must be positive");
    if (!(ridge_fallback >= 0.0)) fail(ErrorKind::InvalidArgument, "ridge_fallback must be non-negative");
}

namespace {

// Solves info * step = grad for a positive semidefinite information matrix.
// Falls back to info + ridge * I once; throws Diverged if that is singular too.
Vector newton_direction(const Matrix& info, const Vector& grad, double ridge) {
    constexpr double kMinRcond = 1e-13;
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() == Eigen::Success && llt.rcond() > kMinRcond) {
        Vector step = llt.solve(grad);
        if (step.allFinite()) return step;
    }
    llt.compute(info + ridge * Matrix::Identity(info.rows(), info.cols()));
    if (llt.info() == Eigen::Success && llt.rcond() > kMinRcond * 1e-3) {
        Vector step = llt.solve(grad);
        if (step.allFinite()) return step;
    }
    fail(ErrorKind::Diverged, "information matrix is singular even after ridge fallback");
}

}  // namespace

CoxModel fit_cox(const SurvivalDataset& data, const FitConfig& config) {
    config.validate();
    data.require_fittable();

    const auto standardization = Standardization::fit(data.covariates());
    const auto varying = standardization.varying_columns();
    const auto p = static_cast<Eigen::Index>(data.p());

    CoxModel model;
    model.beta = Vector::Zero(p);
    if (varying.empty()) {
        model.converged = true;
        model.iterations = 1;
        model.final_log_partial_likelihood = log_partial_likelihood(model.beta, data);
        return model;
    }

    const Matrix z = standardization.apply(data.covariates());
    Matrix z_active(z.rows(), static_cast<Eigen::Index>(varying.size()));
    for (std::size_t k = 0; k < varying.size(); ++k) {
        z_active.col(static_cast<Eigen::Index>(k)) = z.col(static_cast<Eigen::Index>(varying[k]));
    }
    const PartialLikelihood likelihood(std::move(z_active), data);

    Vector b = Vector::Zero(static_cast<Eigen::Index>(varying.size()));
    double current = likelihood.value(b);
    constexpr int kMaxHalvings = 20;

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        model.iterations = iter;
        const auto eval = likelihood.evaluate(b, true);
        const Vector step = newton_direction(-eval.hessian, eval.gradient, config.ridge_fallback);

        double t = 1.0;
        bool accepted = false;
        bool any_finite = false;
        Vector candidate;
        double candidate_value = 0.0;
        for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
            candidate = b + t * step;
            candidate_value = likelihood.value(candidate);
            if (!std::isfinite(candidate_value)) continue;
            any_finite = true;
            if (candidate_value >= current) {
                accepted = true;
                break;
            }
        }
        if (!any_finite) fail(ErrorKind::Diverged, "log partial likelihood is not finite along the Newton step");
        if (!accepted) {
            // No ascent along the Newton direction: the iterate is optimal to
            // working precision.
            model.converged = true;
            break;
        }
        const double change = std::abs(candidate_value - current);
        b = std::move(candidate);
        current = candidate_value;
        if (change <= config.tolerance * std::abs(current)) {
            model.converged = true;
            break;
        }
    }

    Vector full = Vector::Zero(p);
    for (std::size_t k = 0; k < varying.size(); ++k) {
        full[static_cast<Eigen::Index>(varying[k])] = b[static_cast<Eigen::Index>(k)];
    }
    model.beta = standardization.to_original(full);
    if (!model.beta.allFinite()) fail(ErrorKind::Diverged, "fitted coefficients are not finite");
    model.final_log_partial_likelihood = current;
    return model;
}

Vector risk_scores(const Vector& beta, const SurvivalDataset& data) {
    if (static_cast<std::size_t>(beta.size()) != data.p()) {
        fail(ErrorKind::DimensionMismatch, "coefficient vector length does not match the covariate count");
    }
    return data.covariates() * beta;
}

Vector risk_scores(const CoxModel& model, const SurvivalDataset& data) { return risk_scores(model.beta, data); }

}  // namespace survbv

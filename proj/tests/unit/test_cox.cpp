#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "survbv/cox.hpp"
#include "survbv/data_io.hpp"
#include "survbv/error.hpp"

using namespace survbv;

namespace {

double max_rel_error(const Vector& got, const Vector& want) {
    return (got - want).lpNorm<Eigen::Infinity>() / std::max(1.0, want.lpNorm<Eigen::Infinity>());
}

SurvivalDataset one_covariate_instance(std::uint64_t seed, std::size_t n) {
    // Exponential times with hazard exp(0.8 x); 25% Bernoulli censoring.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> expo(1.0);
    std::bernoulli_distribution censor(0.25);
    Matrix x(static_cast<Eigen::Index>(n), 1);
    Vector t(static_cast<Eigen::Index>(n));
    std::vector<std::uint8_t> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 0) = normal(rng);
        t[r] = expo(rng) / std::exp(0.8 * x(r, 0));
        e[i] = censor(rng) ? 0 : 1;
    }
    e[0] = e[1] = 1;
    return SurvivalDataset(x, t, e);
}

}  // namespace

TEST_CASE("log partial likelihood closed forms") {
    Matrix x(3, 2);
    x << 0.3, -1.0, 2.0, 0.5, -0.7, 1.5;
    const SurvivalDataset d(x, Vector::LinSpaced(3, 1.0, 3.0), {1, 1, 1});
    // Risk sets of sizes 3, 2, 1 with unit weights: -(log 3 + log 2 + log 1).
    CHECK(log_partial_likelihood(Vector::Zero(2), d) == doctest::Approx(-1.791759469228055).epsilon(1e-14));

    for (std::size_t n : {2u, 5u, 12u}) {
        const auto m = static_cast<Eigen::Index>(n);
        const SurvivalDataset dn(Matrix::Random(m, 1), Vector::LinSpaced(m, 1.0, static_cast<double>(n)),
                                 std::vector<std::uint8_t>(n, 1));
        CHECK(log_partial_likelihood(Vector::Zero(1), dn) ==
              doctest::Approx(-std::lgamma(static_cast<double>(n) + 1.0)).epsilon(1e-13));
    }
}

TEST_CASE("log partial likelihood matches the naive double loop") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 25; ++rep) {
        const auto d = oracle::random_dataset(rng, 20, 3, 0.3, rep % 2 ? 0.3 : 0.0);
        Vector beta(3);
        for (auto& b : beta) b = normal(rng);
        const double want = oracle::naive_log_partial_likelihood(beta, d);
        CHECK(std::abs(log_partial_likelihood(beta, d) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("errors from likelihood evaluation") {
    const SurvivalDataset d(Matrix::Ones(3, 2), Vector::LinSpaced(3, 1.0, 3.0), {1, 0, 1});
    CHECK_THROWS_AS(log_partial_likelihood(Vector::Zero(3), d), Error);
    const SurvivalDataset none(Matrix::Ones(3, 2), Vector::LinSpaced(3, 1.0, 3.0), {0, 0, 0});
    try {
        log_partial_likelihood(Vector::Zero(2), none);
        FAIL("expected NoEvents");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoEvents);
    }
}

TEST_CASE("derivatives agree with finite differences") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = oracle::random_dataset(rng, 50, 5, 0.3, rep % 4 == 0 ? 0.2 : 0.0);
        Vector beta(5);
        for (auto& b : beta) b = 0.5 * normal(rng);
        const auto f = [&](const Vector& b) { return log_partial_likelihood(b, d); };
        const auto g = [&](const Vector& b) { return gradient(b, d); };
        const Vector g_fd = oracle::central_difference(f, beta, 1e-5);
        CHECK(max_rel_error(gradient(beta, d), g_fd) <= 1e-6);

        const Matrix h = hessian(beta, d);
        const Matrix h_fd = oracle::central_difference_jacobian(g, beta, 1e-5);
        CHECK((h - h_fd).lpNorm<Eigen::Infinity>() / std::max(1.0, h_fd.lpNorm<Eigen::Infinity>()) <= 1e-5);
        CHECK((h - h.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("gradient ignores an all-zero covariate") {
    std::mt19937_64 rng(3);
    auto base = oracle::random_dataset(rng, 30, 2, 0.2);
    Matrix x = base.covariates();
    x.col(1).setZero();
    const SurvivalDataset d(x, base.times(), base.events());
    for (double b : {-2.0, 0.0, 1.5}) {
        Vector beta(2);
        beta << b, 3.0;
        CHECK(gradient(beta, d)[1] == 0.0);
    }
}

TEST_CASE("log partial likelihood is concave") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (int rep = 0; rep < 40; ++rep) {
        const auto d = oracle::random_dataset(rng, 25, 3, 0.3);
        Vector b1(3), b2(3);
        for (auto& v : b1) v = 2 * normal(rng);
        for (auto& v : b2) v = 2 * normal(rng);
        const double a = unit(rng);
        const double mixed = log_partial_likelihood(a * b1 + (1 - a) * b2, d);
        CHECK(mixed >= a * log_partial_likelihood(b1, d) + (1 - a) * log_partial_likelihood(b2, d) - 1e-10);
    }
}

TEST_CASE("fit_cox with constant covariates returns the null model") {
    const SurvivalDataset d(Matrix::Constant(6, 2, 4.2), Vector::LinSpaced(6, 1.0, 6.0), {1, 0, 1, 1, 0, 1});
    const auto model = fit_cox(d);
    CHECK(model.beta.isZero(0.0));
    CHECK(model.converged);
    CHECK(model.iterations == 1);
    CHECK(risk_scores(model, d).isZero(0.0));
    CHECK(concordance_index(risk_scores(model, d), d) == 0.5);
}

TEST_CASE("one-covariate fits match grid search of the likelihood") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto d = one_covariate_instance(seed, 20);
        const auto model = fit_cox(d);
        REQUIRE(model.converged);
        const double grid = oracle::grid_search_max(
            [&](double b) { return log_partial_likelihood(Vector::Constant(1, b), d); }, -10.0, 10.0, 1e-4);
        CHECK(std::abs(model.beta[0] - grid) <= 1e-4);
    }
}

TEST_CASE("fit_cox post-conditions") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        auto d = oracle::random_dataset(rng, 80, 4, 0.3);
        // Give the covariates some signal so the optimum is interior and nonzero.
        Vector t = d.times().array() * (-0.7 * d.covariates().col(0).array()).exp();
        d = SurvivalDataset(d.covariates(), t, d.events());
        const auto model = fit_cox(d);
        REQUIRE(model.converged);
        const double ll = log_partial_likelihood(model.beta, d);
        CHECK(model.final_log_partial_likelihood == doctest::Approx(ll).epsilon(1e-10));
        CHECK(gradient(model.beta, d).lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, std::abs(ll)));

        // Rescaling a column rescales its coefficient inversely.
        Matrix x = d.covariates();
        x.col(2) *= 7.5;
        const auto scaled = fit_cox(SurvivalDataset(x, d.times(), d.events()));
        CHECK(std::abs(scaled.beta[2] - model.beta[2] / 7.5) <= 1e-6);
        CHECK(std::abs(scaled.beta[0] - model.beta[0]) <= 1e-6);
    }
}

TEST_CASE("fit_cox recovers synthetic proportional-hazards coefficients") {
    SyntheticSpec spec;
    spec.n = 2000;
    spec.true_beta = Vector(3);
    spec.true_beta << 1.0, -1.0, 0.0;
    spec.censoring_rate_target = 0.3;
    spec.seed = 7;
    const auto synthetic = generate_synthetic(spec);
    const auto model = fit_cox(synthetic.data);
    CHECK(model.converged);
    CHECK((model.beta - spec.true_beta).lpNorm<Eigen::Infinity>() <= 0.1);
}

TEST_CASE("risk scores") {
    Matrix x(3, 2);
    x << 1, 5, 2, 6, 3, 7;
    const SurvivalDataset d(x, Vector::LinSpaced(3, 1.0, 3.0), {1, 1, 0});
    CHECK(risk_scores(Vector::Zero(2), d).isZero(0.0));
    CHECK(risk_scores(Vector::Unit(2, 0), d) == x.col(0));
    CHECK_THROWS_AS(risk_scores(Vector::Zero(3), d), Error);

    std::mt19937_64 rng(2);
    const auto r = oracle::random_dataset(rng, 40, 3, 0.3);
    const auto model = fit_cox(r);
    const Vector s = risk_scores(model, r);
    CHECK(concordance_index(s, r) == concordance_index(s.array().exp().matrix(), r));
}

TEST_CASE("perfectly separated data drives the coefficient outward or raises Diverged") {
    // Covariate exactly orders the failures: the likelihood increases without bound in beta.
    Matrix x(6, 1);
    x << 6, 5, 4, 3, 2, 1;
    const SurvivalDataset d(x, Vector::LinSpaced(6, 1.0, 6.0), {1, 1, 1, 1, 1, 1});
    try {
        const auto model = fit_cox(d);
        CHECK(model.beta[0] > 5.0);
        CHECK(std::isfinite(model.final_log_partial_likelihood));
        CHECK(model.final_log_partial_likelihood > -1e-2);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Diverged);
    }
}

TEST_CASE("fit configuration validation") {
    FitConfig bad;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = FitConfig{};
    bad.max_iterations = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

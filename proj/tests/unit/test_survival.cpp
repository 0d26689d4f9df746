#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "survbv/error.hpp"
#include "survbv/survival.hpp"

using namespace survbv;

namespace {

SurvivalDataset make(std::vector<double> times, std::vector<std::uint8_t> events) {
    const auto n = static_cast<Eigen::Index>(times.size());
    return SurvivalDataset(Matrix::Zero(n, 1), Eigen::Map<Vector>(times.data(), n), std::move(events));
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("dataset construction validates its invariants") {
    CHECK_THROWS_AS(make({1.0, -2.0}, {1, 1}), Error);
    CHECK_THROWS_AS(make({1.0, 0.0}, {1, 1}), Error);
    CHECK_THROWS_AS(make({1.0, 2.0}, {1, 2}), Error);
    CHECK_THROWS_AS(SurvivalDataset(Matrix::Zero(3, 1), Vector::Ones(2), {1, 1}), Error);

    Matrix x = Matrix::Zero(2, 1);
    x(1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(SurvivalDataset(x, Vector::Ones(2), {1, 1}), Error);

    const auto d = make({3.0, 1.0}, {0, 1});
    CHECK(d.n() == 2);
    CHECK(d.p() == 1);
    CHECK(d.event_count() == 1);
    CHECK(d.feature_names() == std::vector<std::string>{"x1"});

    const auto censored_only = make({1.0, 2.0}, {0, 0});
    try {
        censored_only.require_fittable();
        FAIL("expected NoEvents");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoEvents);
    }
}

TEST_CASE("subset and observation access") {
    Matrix x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    const SurvivalDataset d(x, vec({1, 2, 3}), {1, 0, 1}, {"a", "b"});
    const std::vector<std::size_t> rows{2, 0};
    const auto s = d.subset(rows);
    CHECK(s.n() == 2);
    CHECK(s.time(0) == 3.0);
    CHECK(s.covariates()(1, 1) == 2.0);
    CHECK(s.feature_names() == d.feature_names());
    const auto obs = d.observation(1);
    CHECK(obs.time == 2.0);
    CHECK_FALSE(obs.event);
    CHECK(obs.covariates[0] == 3.0);
    CHECK(SurvivalDataset::from_observations({obs, d.observation(2)}, {"a", "b"}).event_count() == 1);
}

TEST_CASE("comparable pairs follow the censoring-induced partial order") {
    SUBCASE("total order") {
        const auto pairs = enumerate_comparable_pairs(make({1, 2, 3}, {1, 1, 1}));
        CHECK(pairs == std::vector<ComparablePair>{{0, 1}, {0, 2}, {1, 2}});
    }
    SUBCASE("censored earlier observation orders nothing") {
        const auto pairs = enumerate_comparable_pairs(make({2, 3, 5}, {1, 0, 1}));
        CHECK(pairs == std::vector<ComparablePair>{{0, 1}, {0, 2}});
    }
    SUBCASE("tied times are incomparable") {
        CHECK(enumerate_comparable_pairs(make({4, 4}, {1, 1})).empty());
    }
    SUBCASE("matches the double-loop reference for n <= 50") {
        std::mt19937_64 rng(11);
        for (int rep = 0; rep < 30; ++rep) {
            const std::size_t n = 2 + rng() % 49;
            const auto d = oracle::random_dataset(rng, n, 1, 0.4, rep % 3 == 0 ? 0.25 : 0.0);
            CHECK(enumerate_comparable_pairs(d) == oracle::pairs_double_loop(d));
        }
    }
}

TEST_CASE("concordance index examples") {
    const auto d = make({1, 2, 3}, {1, 1, 1});
    CHECK(concordance_index(vec({3, 2, 1}), d) == 1.0);
    CHECK(concordance_index(vec({1, 2, 3}), d) == 0.0);
    CHECK(concordance_index(vec({7, 7, 7}), d) == 0.5);

    try {
        concordance_index(vec({1, 2}), make({4, 4}, {1, 1}));
        FAIL("expected NoComparablePairs");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoComparablePairs);
    }
    CHECK_THROWS_AS(concordance_index(vec({1, 2}), d), Error);
}

TEST_CASE("sort-and-count concordance equals brute force exactly") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coarse(0, 4);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t n = 2 + rng() % 99;
        const auto d = oracle::random_dataset(rng, n, 1, 0.3, rep % 2 == 0 ? 0.2 : 0.0);
        Vector s(static_cast<Eigen::Index>(n));
        for (auto& v : s) v = rep % 3 == 0 ? coarse(rng) : std::normal_distribution<double>()(rng);
        const auto fast = concordance_counts(s, d);
        const auto slow = oracle::count_pairs_double_loop(s, d);
        CHECK(fast.concordant == slow.concordant);
        CHECK(fast.discordant == slow.discordant);
        CHECK(fast.tied_score == slow.tied);
    }
}

TEST_CASE("concordance properties") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 25; ++rep) {
        const auto d = oracle::random_dataset(rng, 30, 1, 0.3);
        Vector s(30);
        for (auto& v : s) v = std::normal_distribution<double>()(rng);
        const auto c = concordance_counts(s, d);
        if (c.total() == 0) continue;
        const double ci = c.index();
        CHECK(ci >= 0.0);
        CHECK(ci <= 1.0);
        CHECK(ci + concordance_index(-s, d) == doctest::Approx(1.0).epsilon(1e-15));
        // Strictly increasing transforms leave every comparison unchanged.
        CHECK(concordance_index(s.array().exp().matrix(), d) == ci);
        CHECK(concordance_index((3.0 * s.array() + 1.0).cube().matrix(), d) == ci);
    }
}

TEST_CASE("classify_pairs labels") {
    const std::vector<ComparablePair> pair{{0, 1}};
    CHECK(classify_pairs(vec({5, 1}), pair).front() == PairLabel::Concordant);
    CHECK(classify_pairs(vec({1, 5}), pair).front() == PairLabel::Discordant);
    CHECK(classify_pairs(vec({2, 2}), pair).front() == PairLabel::Tie);
    CHECK_THROWS_AS(classify_pairs(vec({2}), pair), Error);
}

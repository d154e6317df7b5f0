#include "rss/analysis.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rss;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

SupportSet sup(std::vector<Index> idx, Index p = 6) { return SupportSet(std::move(idx), p); }

// One center of n samples over p columns; column 0 carries the label with a
// margin when `separable`.
CenterCollection pooled(Index n, Index p, bool separable, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Dataset d;
    d.center_id = "c";
    d.mask = VoxelMask::full({static_cast<int>(p), 1, 1});
    d.y = testing::random_labels(rng, n, 5);
    d.X = testing::random_matrix(rng, n, p);
    if (separable)
        for (Index i = 0; i < n; ++i) d.X(static_cast<Eigen::Index>(i), 0) = d.y[i] * (1.0 + std::abs(d.X(static_cast<Eigen::Index>(i), 0)));
    CenterCollection c;
    c.datasets.push_back(d);
    return c;
}

}  // namespace

TEST_CASE("laplace moment fit examples") {
    const LaplaceFit f = fit_laplace(vec({-1, 1, -1, 1}));
    CHECK(f.mu == doctest::Approx(0.0));
    CHECK(f.b == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    const LaplaceFit g = fit_laplace(vec({4, 6, 4, 6}));
    CHECK(g.mu == doctest::Approx(5.0));
    CHECK(g.b == doctest::Approx(f.b).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(fit_laplace(vec({2, 2, 2})), doctest::Contains("zero scale"), DataError);
    CHECK_THROWS_AS(fit_laplace(vec({1})), DataError);
    CHECK_THROWS_AS(fit_laplace(vec({1, NAN})), DataError);
}

TEST_CASE("laplace mle fit") {
    const LaplaceFit f = fit_laplace(vec({0, 1, 2, 10}), LaplaceMode::mle);
    CHECK(f.mu == doctest::Approx(1.5));
    CHECK(f.b == doctest::Approx((1.5 + 0.5 + 0.5 + 8.5) / 4));
    CHECK_THROWS_WITH_AS(fit_laplace(vec({3, 3}), LaplaceMode::mle), doctest::Contains("zero scale"), DataError);
}

TEST_CASE("laplace icdf against bisection oracle") {
    const LaplaceFit unit{0.0, 1.0};
    CHECK(laplace_icdf(0.5, LaplaceFit{3.2, 7.0}) == 3.2);
    CHECK(laplace_icdf(0.975, unit) == doctest::Approx(-std::log(0.05)).epsilon(1e-14));
    CHECK(laplace_icdf(0.975, unit) == doctest::Approx(2.99573227355399).epsilon(1e-12));
    CHECK(laplace_icdf(0.99, unit) == doctest::Approx(3.91202300542815).epsilon(1e-12));
    for (double mu : {-3.0, 0.0, 2.5})
        for (double b : {0.1, 1.0, 4.0})
            for (double p : {0.01, 0.2, 0.5, 0.7, 0.975, 0.99})
                CHECK(std::abs(laplace_icdf(p, {mu, b}) - oracle::laplace_quantile(p, mu, b)) <= 1e-12 * (1 + std::abs(mu) + 20 * b));
    CHECK_THROWS_AS(laplace_icdf(0.0, unit), DataError);
    CHECK_THROWS_AS(laplace_icdf(1.0, unit), DataError);
}

TEST_CASE("icdf inverts cdf over mu +- 10b") {
    double worst = 0;
    for (double mu : {-5.0, 0.0, 0.3, 12.0})
        for (double b : {0.05, 1.0, 3.0})
            for (int k = -100; k <= 100; ++k) {
                const double x = mu + b * k / 10.0;
                worst = std::max(worst, std::abs(laplace_icdf(laplace_cdf(x, {mu, b}), {mu, b}) - x) / b);
            }
    CHECK(worst < 1e-10);
}

TEST_CASE("laplace fit recovers parameters from 1e5 samples") {
    std::mt19937_64 rng(2024);
    std::exponential_distribution<double> E(1.0);
    Vector v(100000);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 2.0 + 3.0 * (E(rng) - E(rng));
    for (LaplaceMode mode : {LaplaceMode::moment, LaplaceMode::mle}) {
        const LaplaceFit f = fit_laplace(v, mode);
        CHECK(std::abs(f.mu - 2.0) < 0.02 * 2.0);
        CHECK(std::abs(f.b - 3.0) < 0.02 * 3.0);
    }
}

TEST_CASE("threshold_support examples and monotonicity") {
    CHECK(threshold_support(vec({0, 2, -3}), 1.0).indices == std::vector<Index>{1, 2});
    CHECK(threshold_support(vec({0.5, 2, -3}), 3.0).empty());
    CHECK(threshold_support(vec({0.5, 2, -3}), 0.0).size() == 3);
    std::mt19937_64 rng(3);
    const Matrix r = testing::random_matrix(rng, 200, 1);
    const Vector v = r.col(0);
    for (double t1 = 0; t1 < 3; t1 += 0.25)
        for (double t2 = t1; t2 < 3; t2 += 0.25) {
            const SupportSet a = threshold_support(v, t1), b = threshold_support(v, t2);
            CHECK(intersect(a, b) == b);
        }
}

TEST_CASE("gap threshold examples") {
    const Vector a = vec({5, 4.8, 4.6, 0.01, 0.009});
    CHECK(gap_threshold(a) == doctest::Approx(std::sqrt(4.6 * 0.01)).epsilon(1e-12));
    CHECK(gap_threshold(a) == doctest::Approx(0.2145).epsilon(1e-3));
    CHECK(threshold_support(a, gap_threshold(a)).size() == 3);
    const Vector g = vec({1, -8, 2, 4});
    CHECK(gap_threshold(g) == doctest::Approx(std::sqrt(32.0)).epsilon(1e-12));
    CHECK(threshold_support(g, gap_threshold(g)).indices == std::vector<Index>{1});
    CHECK(gap_threshold(vec({0, 3, 0, 1})) == doctest::Approx(std::sqrt(3.0)));
    CHECK_THROWS_AS(gap_threshold(vec({2, 2, -2})), DataError);
    CHECK_THROWS_AS(gap_threshold(vec({0, 0, 7})), DataError);
}

TEST_CASE("overlap examples and nesting") {
    const std::vector<SupportSet> s{sup({1, 2, 3}), sup({2, 3, 4}), sup({3, 4, 5})};
    CHECK(overlap(s, 2).at_least().indices == std::vector<Index>{2, 3, 4});
    CHECK(overlap(s, 3).at_least().indices == std::vector<Index>{3});
    CHECK(overlap(s, 1).at_least().indices == std::vector<Index>{1, 2, 3, 4, 5});
    CHECK(overlap(s, 1).counts == std::vector<int>{0, 1, 2, 3, 2, 1});
    CHECK_THROWS_AS(overlap(s, 0), DataError);
    CHECK_THROWS_AS(overlap(s, 4), DataError);
    CHECK_THROWS_AS(overlap({}, 1), DataError);
    CHECK_THROWS_AS(overlap({sup({1}), sup({1}, 7)}, 1), DataError);

    std::mt19937_64 rng(5);
    std::vector<SupportSet> many;
    for (int k = 0; k < 6; ++k) {
        std::vector<Index> idx;
        for (Index j = 0; j < 50; ++j)
            if (std::bernoulli_distribution(0.3)(rng)) idx.push_back(j);
        many.emplace_back(idx, 50);
    }
    const OverlapResult r = overlap(many, 1);
    for (int S = 1; S < 6; ++S) CHECK(intersect(r.support_at.at(S), r.support_at.at(S + 1)) == r.support_at.at(S + 1));
}

TEST_CASE("random_support") {
    const SupportSet a = random_support(100, 17, 4);
    CHECK(a.size() == 17);
    CHECK(a.p == 100);
    CHECK(random_support(100, 17, 4) == a);
    CHECK_FALSE(random_support(100, 17, 5) == a);
    CHECK(random_support(10, 10, 1).size() == 10);
    CHECK_THROWS_AS(random_support(5, 6, 1), DataError);
}

TEST_CASE("prediction on a separable column") {
    const CenterCollection c = pooled(80, 6, true, 1);
    PredictionConfig cfg;
    cfg.n_splits = 20;
    cfg.seed = 9;
    const PredictionResult r = evaluate_prediction(c, sup({0}), cfg);
    CHECK(r.accuracies.size() == 20);
    CHECK(r.mean_acc == 1.0);
    CHECK(r.std_acc == 0.0);
    cfg.threads = 4;
    CHECK(evaluate_prediction(c, sup({0}), cfg).accuracies == r.accuracies);
}

TEST_CASE("prediction on noise columns is near chance") {
    const CenterCollection c = pooled(200, 6, false, 2);
    PredictionConfig cfg;
    cfg.n_splits = 20;
    cfg.seed = 3;
    const PredictionResult r = evaluate_prediction(c, sup({1, 2, 3}), cfg);
    const double n_test = 20.0;
    CHECK(std::abs(r.mean_acc - 0.5) < 3.0 * std::sqrt(0.25 / n_test));
    CHECK_THROWS_AS(evaluate_prediction(c, sup({}), cfg), DataError);
}

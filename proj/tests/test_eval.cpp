#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "hugat/eval.hpp"

using namespace hugat;
using namespace hugat::eval;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
    std::uniform_real_distribution<double> unif(lo, hi);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = unif(rng);
    return m;
}

// two well-separated gaussian blobs in 2-d
std::pair<Matrix, std::vector<int>> two_blobs(std::size_t per_blob, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 0.3);
    Matrix z(2 * per_blob, 2);
    std::vector<int> labels(2 * per_blob);
    for (std::size_t i = 0; i < 2 * per_blob; ++i) {
        const int c = i < per_blob ? 0 : 1;
        labels[i] = c;
        z(i, 0) = 10.0 * c + noise(rng);
        z(i, 1) = -5.0 * c + noise(rng);
    }
    return {z, labels};
}

}  // namespace

TEST_CASE("perfect predictions give zero error and r2 = 1") {
    std::vector<double> y = {1, 2, 3, 4};
    auto m = regression_metrics(y, y);
    CHECK(m.mae == 0.0);
    CHECK(m.rmse == 0.0);
    CHECK(m.r2 == doctest::Approx(1.0));
}

TEST_CASE("predicting the mean gives r2 = 0") {
    std::vector<double> y = {0, 2, 4};
    std::vector<double> y_hat = {2, 2, 2};
    auto m = regression_metrics(y, y_hat);
    CHECK(m.r2 == doctest::Approx(0.0));
    CHECK(m.mae == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("hand-worked two-point metrics") {
    std::vector<double> y = {0, 2};
    std::vector<double> y_hat = {1, 1};
    auto m = regression_metrics(y, y_hat);
    CHECK(m.mae == doctest::Approx(1.0));
    CHECK(m.rmse == doctest::Approx(1.0));
    CHECK(m.r2 == doctest::Approx(0.0));
}

TEST_CASE("constant targets are degenerate") {
    std::vector<double> y = {3, 3, 3};
    CHECK_THROWS_AS(regression_metrics(y, y), DegenerateTarget);
}

TEST_CASE("rmse is never below mae") {
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> y(20), y_hat(20);
        for (std::size_t i = 0; i < 20; ++i) {
            y[i] = unif(rng);
            y_hat[i] = unif(rng);
        }
        auto m = regression_metrics(y, y_hat);
        CHECK(m.rmse >= m.mae - 1e-12);
    }
}

TEST_CASE("lasso with lambda 0 matches ordinary least squares") {
    std::mt19937_64 rng(83);
    const std::size_t n = 40;
    Matrix x = random_matrix(n, 1, rng, -2.0, 2.0);
    std::vector<double> y(n);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (std::size_t i = 0; i < n; ++i) y[i] = 1.5 + 2.0 * x(i, 0) + noise(rng);

    auto coefs = lasso_fit(x, y, 0.0);
    REQUIRE(coefs.size() == 2);

    // closed-form simple regression
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x(i, 0);
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x(i, 0) - mx) * (y[i] - my);
        sxx += (x(i, 0) - mx) * (x(i, 0) - mx);
    }
    const double slope = sxy / sxx, intercept = my - slope * mx;
    CHECK(coefs[1] == doctest::Approx(slope).epsilon(1e-6));
    CHECK(coefs[0] == doctest::Approx(intercept).epsilon(1e-6));
}

TEST_CASE("huge lambda shrinks every coefficient to zero") {
    std::mt19937_64 rng(85);
    Matrix x = random_matrix(30, 3, rng);
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) y[i] = x(i, 0) - x(i, 2) + 4.0;
    auto coefs = lasso_fit(x, y, 1e6);
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / 30.0;
    CHECK(coefs[0] == doctest::Approx(mean).epsilon(1e-9));
    for (std::size_t k = 1; k < coefs.size(); ++k) CHECK(coefs[k] == 0.0);
}

TEST_CASE("cross-validated lasso recovers a realizable linear target") {
    std::mt19937_64 rng(87);
    const std::size_t n = 80;
    Matrix x = random_matrix(n, 4, rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = 3.0 * x(i, 0) - 2.0 * x(i, 1) + 0.5 * x(i, 3) + 1.0;
    auto report = lasso_cv_fit(x, y, {}, "toy");
    CHECK(report.task == "toy");
    CHECK(report.r2 >= 0.999);
    CHECK(report.fold_of.size() == n);
    for (int f : report.fold_of) {
        CHECK(f >= 0);
        CHECK(f < 5);
    }
}

TEST_CASE("cv folds are seed-deterministic") {
    std::mt19937_64 rng(89);
    Matrix x = random_matrix(30, 2, rng);
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) y[i] = x(i, 0) + 0.1 * i;
    LassoOptions opts;
    opts.seed = 5;
    auto a = lasso_cv_fit(x, y, opts);
    auto b = lasso_cv_fit(x, y, opts);
    CHECK(a.fold_of == b.fold_of);
    CHECK(a.r2 == b.r2);
    CHECK(a.lambda == b.lambda);
}

TEST_CASE("kmeans separates two blobs perfectly") {
    std::mt19937_64 rng(91);
    auto [z, labels] = two_blobs(20, rng);
    auto report = kmeans(z, 2, 10, 3);
    CHECK(nmi(report.labels, labels) == doctest::Approx(1.0));
    CHECK(ari(report.labels, labels) == doctest::Approx(1.0));
    CHECK(report.nmi == 0.0);  // report carries no ground truth by itself
}

TEST_CASE("kmeans with k = n gives zero objective") {
    std::mt19937_64 rng(93);
    Matrix z = random_matrix(6, 2, rng);
    auto report = kmeans(z, 6, 5, 1);
    CHECK(report.objective == doctest::Approx(0.0).scale(1.0));
    std::set<int> distinct(report.labels.begin(), report.labels.end());
    CHECK(distinct.size() == 6);
}

TEST_CASE("kmeans objective trace is non-increasing") {
    std::mt19937_64 rng(95);
    Matrix z = random_matrix(50, 3, rng);
    auto report = kmeans(z, 4, 5, 7);
    REQUIRE(!report.objective_trace.empty());
    for (std::size_t i = 1; i < report.objective_trace.size(); ++i)
        CHECK(report.objective_trace[i] <= report.objective_trace[i - 1] + 1e-9);
    CHECK(report.objective == doctest::Approx(report.objective_trace.back()));
}

TEST_CASE("kmeans rejects k larger than the sample count") {
    Matrix z(3, 2, 0.0);
    CHECK_THROWS_AS(kmeans(z, 4), KTooLarge);
}

TEST_CASE("nmi and ari are 1 for identical and permuted labelings") {
    std::vector<int> a = {0, 0, 1, 1, 2, 2};
    std::vector<int> permuted = {2, 2, 0, 0, 1, 1};
    CHECK(nmi(a, a) == doctest::Approx(1.0));
    CHECK(ari(a, a) == doctest::Approx(1.0));
    CHECK(nmi(a, permuted) == doctest::Approx(1.0));
    CHECK(ari(a, permuted) == doctest::Approx(1.0));
}

TEST_CASE("independent checkerboard labelings score zero nmi and negative ari") {
    std::vector<int> a = {0, 0, 1, 1};
    std::vector<int> b = {0, 1, 0, 1};
    CHECK(nmi(a, b) == doctest::Approx(0.0).scale(1.0));
    CHECK(ari(a, b) == doctest::Approx(-0.5));
}

TEST_CASE("nmi on a hand-worked contingency table") {
    // a: {0,0,1,1,1,2}, b: {0,0,0,1,1,1}
    std::vector<int> a = {0, 0, 1, 1, 1, 2};
    std::vector<int> b = {0, 0, 0, 1, 1, 1};
    // joint: (0,0)=2, (1,0)=1, (1,1)=2, (2,1)=1, n=6
    const double n = 6;
    auto term = [&](double nij, double ai, double bj) {
        return nij / n * std::log(nij * n / (ai * bj));
    };
    const double mi = term(2, 2, 3) + term(1, 3, 3) + term(2, 3, 3) + term(1, 1, 3);
    auto h = [&](const std::vector<double>& sizes) {
        double s = 0;
        for (double c : sizes) s -= c / n * std::log(c / n);
        return s;
    };
    const double expected = mi / (0.5 * (h({2, 3, 1}) + h({3, 3})));
    CHECK(nmi(a, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("degenerate single-cluster labelings score zero nmi") {
    std::vector<int> constant = {0, 0, 0, 0};
    std::vector<int> varied = {0, 1, 0, 1};
    CHECK(nmi(constant, varied) == 0.0);
}

TEST_CASE("nearest neighbors are ordered by distance with id tie-breaks") {
    Matrix z(5, 1);
    z(0, 0) = 0.0;
    z(1, 0) = 1.0;
    z(2, 0) = -1.0;  // ties with region 1
    z(3, 0) = 5.0;
    z(4, 0) = 0.5;
    auto nn = nearest_neighbors(z, 0, 3);
    CHECK(nn == std::vector<int>{4, 1, 2});
    CHECK_THROWS_AS(nearest_neighbors(z, 9, 2), UnknownRegion);
}

TEST_CASE("flow regression recovers a planted linear flow model") {
    std::mt19937_64 rng(97);
    const std::size_t n = 20;
    Matrix z = random_matrix(n, 3, rng);
    Matrix d(n, n);
    std::uniform_real_distribution<double> unif(0.5, 3.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : unif(rng);
    std::vector<FlowObservation> flows;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double f =
                5.0 + 2.0 * z(i, 0) - 1.5 * z(j, 1) + 0.8 * z(i, 2) * z(j, 2) + 3.0 * d(i, j);
            flows.push_back({static_cast<int>(i), static_cast<int>(j), f});
        }
    auto report = flow_regression(z, d, flows);
    CHECK(report.r2 >= 0.99);
}

TEST_CASE("flow regression refuses missing distances") {
    Matrix z(3, 2, 0.5);
    Matrix d(3, 3, std::numeric_limits<double>::quiet_NaN());
    std::vector<FlowObservation> flows = {{0, 1, 2.0}, {1, 2, 3.0}, {2, 0, 1.0}};
    CHECK_THROWS_AS(flow_regression(z, d, flows), MissingDistance);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hugat/targets.hpp"
#include "hugat/error.hpp"

using namespace hugat;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

Matrix random_counts(std::size_t n, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    Matrix m(n, c);
    for (std::size_t i = 0; i < n * c; ++i) m.data()[i] = unif(rng);
    return m;
}

}  // namespace

TEST_CASE("trip conditionals on a hand-worked 2x2 count matrix") {
    // F = [[3, 1], [1, 3]]
    OdMatrix od{from_rows({{3, 1}, {1, 3}})};
    auto cond = trip_conditionals(od);
    // p(dst | org=0) = counts row 0 / row sum
    CHECK(cond.p_dst_given_org(0, 0) == doctest::Approx(0.75));
    CHECK(cond.p_dst_given_org(0, 1) == doctest::Approx(0.25));
    // p(org | dst=1) = counts column 1 / column sum
    CHECK(cond.p_org_given_dst(0, 1) == doctest::Approx(0.25));
    CHECK(cond.p_org_given_dst(1, 1) == doctest::Approx(0.75));
}

TEST_CASE("conditional distributions are properly normalized") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 7;
        OdMatrix od{random_counts(n, n, rng)};
        auto cond = trip_conditionals(od);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0, col = 0;
            for (std::size_t j = 0; j < n; ++j) {
                row += cond.p_dst_given_org(i, j);
                col += cond.p_org_given_dst(j, i);
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero marginals fall back to the uniform distribution") {
    OdMatrix od{from_rows({{0, 0, 0}, {1, 2, 3}, {0, 0, 0}})};
    auto cond = trip_conditionals(od);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(cond.p_dst_given_org(0, j) == doctest::Approx(1.0 / 3.0));
        CHECK(cond.p_dst_given_org(2, j) == doctest::Approx(1.0 / 3.0));
    }
}

TEST_CASE("negative counts are rejected") {
    OdMatrix od{from_rows({{1, -1}, {0, 2}})};
    CHECK_THROWS_AS(trip_conditionals(od), NegativeCount);
    CHECK_THROWS_AS(category_distribution(from_rows({{-0.5, 1}})), NegativeCount);
}

TEST_CASE("category distribution normalizes rows, uniform fallback on empty rows") {
    auto dist = category_distribution(from_rows({{2, 2}, {0, 0}, {0, 4}}));
    CHECK(dist.p(0, 0) == doctest::Approx(0.5));
    CHECK(dist.p(1, 0) == doctest::Approx(0.5));  // empty row -> uniform
    CHECK(dist.p(2, 0) == doctest::Approx(0.0));
    CHECK(dist.p(2, 1) == doctest::Approx(1.0));
}

TEST_CASE("hellinger distance closed forms") {
    const double p_same[] = {0.2, 0.3, 0.5};
    CHECK(hellinger_distance(p_same, p_same, 3) == doctest::Approx(0.0));

    const double p[] = {1.0, 0.0};
    const double q[] = {0.0, 1.0};
    CHECK(hellinger_distance(p, q, 2) == doctest::Approx(1.0));

    // H(uniform, point mass) on 2 outcomes: sqrt(1 - 1/sqrt(2)) ~ 0.5412
    const double u[] = {0.5, 0.5};
    CHECK(hellinger_distance(u, p, 2) ==
          doctest::Approx(std::sqrt(1.0 - 1.0 / std::sqrt(2.0))).epsilon(1e-9));
}

TEST_CASE("hellinger is a bounded symmetric metric") {
    std::mt19937_64 rng(41);
    const std::size_t c = 5;
    auto random_dist = [&]() {
        std::vector<double> p(c);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double s = 0;
        for (double& x : p) s += (x = unif(rng));
        for (double& x : p) x /= s;
        return p;
    };
    for (int trial = 0; trial < 200; ++trial) {
        auto p = random_dist(), q = random_dist(), r = random_dist();
        const double pq = hellinger_distance(p.data(), q.data(), c);
        const double qp = hellinger_distance(q.data(), p.data(), c);
        const double pr = hellinger_distance(p.data(), r.data(), c);
        const double rq = hellinger_distance(r.data(), q.data(), c);
        CHECK(pq == doctest::Approx(qp).epsilon(1e-12));
        CHECK(pq >= 0.0);
        CHECK(pq <= 1.0 + 1e-12);
        CHECK(pq <= pr + rq + 1e-12);  // triangle inequality
    }
}

TEST_CASE("hellinger matrix agrees with the pairwise distance and has zero diagonal") {
    std::mt19937_64 rng(43);
    auto dist = category_distribution(random_counts(6, 4, rng));
    auto sim = hellinger_matrix(dist);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(sim.S(i, i) == 0.0);
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(sim.S(i, j) == doctest::Approx(sim.S(j, i)).epsilon(1e-15));
            const double* base = dist.p.data().data();
            if (i != j)
                CHECK(sim.S(i, j) ==
                      doctest::Approx(hellinger_distance(base + i * 4, base + j * 4, 4))
                          .epsilon(1e-12));
        }
    }
}

TEST_CASE("distribution targets are invariant to count scaling") {
    std::mt19937_64 rng(47);
    Matrix counts = random_counts(5, 5, rng);
    Matrix scaled = counts;
    for (double& x : scaled.data()) x *= 7.5;
    auto a = category_distribution(counts), b = category_distribution(scaled);
    for (std::size_t i = 0; i < a.p.data().size(); ++i)
        CHECK(a.p.data()[i] == doctest::Approx(b.p.data()[i]).epsilon(1e-12));
    OdMatrix od{counts}, od_scaled{scaled};
    auto ca = trip_conditionals(od), cb = trip_conditionals(od_scaled);
    for (std::size_t i = 0; i < ca.p_dst_given_org.data().size(); ++i)
        CHECK(ca.p_dst_given_org.data()[i] ==
              doctest::Approx(cb.p_dst_given_org.data()[i]).epsilon(1e-12));
}

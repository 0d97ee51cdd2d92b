#include "hugat/targets.hpp"

#include <cmath>

#include "hugat/error.hpp"

namespace hugat {

ConditionalTripDistributions trip_conditionals(const OdMatrix& f) {
    const std::size_t n = f.F.rows();
    if (f.F.cols() != n) throw ShapeMismatch("OD matrix must be square");
    for (double x : f.F.data())
        if (x < 0) throw NegativeCount("OD matrix entry");

    ConditionalTripDistributions out{Matrix(n, n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += f.F(i, j);
        for (std::size_t i = 0; i < n; ++i)
            out.p_org_given_dst(i, j) = col > 0 ? f.F(i, j) / col : 1.0 / n;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += f.F(i, j);
        for (std::size_t j = 0; j < n; ++j)
            out.p_dst_given_org(i, j) = row > 0 ? f.F(i, j) / row : 1.0 / n;
    }
    return out;
}

CategoryDistribution category_distribution(const Matrix& counts) {
    for (double x : counts.data())
        if (x < 0) throw NegativeCount("category count");
    CategoryDistribution out{Matrix(counts.rows(), counts.cols())};
    const std::size_t c = counts.cols();
    for (std::size_t i = 0; i < counts.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < c; ++j) row += counts(i, j);
        for (std::size_t j = 0; j < c; ++j)
            out.p(i, j) = row > 0 ? counts(i, j) / row : 1.0 / c;
    }
    return out;
}

double hellinger_distance(const double* p, const double* q, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = std::sqrt(p[k]) - std::sqrt(q[k]);
        s += d * d;
    }
    return std::sqrt(s) / std::sqrt(2.0);
}

SimilarityMatrix hellinger_matrix(const CategoryDistribution& dist) {
    const std::size_t n = dist.p.rows();
    const std::size_t c = dist.p.cols();
    SimilarityMatrix out{Matrix(n, n, 0.0)};
    const double* base = dist.p.data().data();
    // each unordered pair once so symmetry is exact
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = hellinger_distance(base + i * c, base + j * c, c);
            out.S(i, j) = d;
            out.S(j, i) = d;
        }
    }
    return out;
}

}  // namespace hugat

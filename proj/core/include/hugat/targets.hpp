#pragma once

#include "hugat/matrix.hpp"

namespace hugat {

// Origin-destination trip counts, F(i, j) = trips from region i to region j.
struct OdMatrix {
    Matrix F;
};

struct ConditionalTripDistributions {
    Matrix p_org_given_dst;  // column j sums to 1
    Matrix p_dst_given_org;  // row i sums to 1
};

// N x C row-stochastic category (or land-use) distribution.
struct CategoryDistribution {
    Matrix p;
};

// Symmetric pairwise Hellinger distances, zero diagonal, values in [0,1].
struct SimilarityMatrix {
    Matrix S;
};

// Zero marginals fall back to the uniform distribution so that the KL and
// Hellinger losses stay finite for inactive regions.
ConditionalTripDistributions trip_conditionals(const OdMatrix& f);

CategoryDistribution category_distribution(const Matrix& counts);

SimilarityMatrix hellinger_matrix(const CategoryDistribution& p);

double hellinger_distance(const double* p, const double* q, std::size_t n);

// Everything the training objectives regress against.
struct RegionTargets {
    OdMatrix od;
    ConditionalTripDistributions trips;
    SimilarityMatrix s_chk;
    SimilarityMatrix s_land;
};

}  // namespace hugat

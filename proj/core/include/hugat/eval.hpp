#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hugat/han.hpp"
#include "hugat/matrix.hpp"
#include "hugat/train.hpp"

namespace hugat::eval {

struct Metrics {
    double mae = 0, rmse = 0, r2 = 0;
};

// Standard definitions; throws DegenerateTarget when y is constant.
Metrics regression_metrics(const std::vector<double>& y, const std::vector<double>& y_hat);

struct RegressionReport {
    std::string task;
    double mae = 0, rmse = 0, r2 = 0;
    std::vector<int> fold_of;  // fold index per sample
    double lambda = 0;         // chosen regularization strength
    bool degenerate_target = false;
};

struct LassoOptions {
    int folds = 5;
    std::vector<double> lambda_grid;  // empty -> default grid
    std::uint64_t seed = 0;
    int max_iter = 100000;
    double tol = 1e-12;
};

// 50 log-spaced values in [1e-4, 1e2]
std::vector<double> default_lambda_grid();

// Coordinate-descent lasso on standardized features with intercept.
// Returns coefficients in original feature scale; coefs[0] is the intercept.
std::vector<double> lasso_fit(const Matrix& x, const std::vector<double>& y, double lambda,
                              int max_iter = 100000, double tol = 1e-12);

double lasso_predict(const std::vector<double>& coefs, const Matrix& x, std::size_t row);

RegressionReport lasso_cv_fit(const Matrix& x, const std::vector<double>& y,
                              const LassoOptions& options = {},
                              const std::string& task = "regression");

struct FlowObservation {
    int origin, dest;
    double count;
};

// f_ij regressed on [z_i || z_j || z_i (.) z_j || d_ij]
RegressionReport flow_regression(const Matrix& z, const Matrix& distances,
                                 const std::vector<FlowObservation>& flows,
                                 const LassoOptions& options = {});

struct ClusteringReport {
    int k = 0;
    std::vector<int> labels;
    double nmi = 0, ari = 0;
    int restarts = 0;
    double objective = 0;                  // best within-cluster sum of squares
    std::vector<double> objective_trace;   // per-iteration, best restart
};

// Lloyd's algorithm with k-means++ seeding, best of `restarts` by objective.
ClusteringReport kmeans(const Matrix& z, int k, int restarts = 10, std::uint64_t seed = 0);

double nmi(const std::vector<int>& a, const std::vector<int>& b);
double ari(const std::vector<int>& a, const std::vector<int>& b);

// top-n regions by Euclidean distance in embedding space, ties by region id
std::vector<int> nearest_neighbors(const Matrix& z, int region_id, int n);

struct AblationInputs {
    std::vector<double> crime;
    std::vector<double> income;
    Matrix distances;
    std::vector<FlowObservation> flows;
    std::vector<int> true_labels;
    int clusters = 2;
};

struct AblationRow {
    std::string metapath_set;
    double crime_r2 = 0, income_r2 = 0, flow_r2 = 0, nmi = 0;
};

// 5 single-meta-path rows followed by 5 cumulative-prefix rows; the last
// cumulative row is the full model for the same seed.
std::vector<AblationRow> metapath_ablation(const HeterogeneousUrbanGraph& g,
                                           const RegionTargets& targets,
                                           const han::HanConfig& han_config,
                                           const train::TrainingConfig& cfg,
                                           const AblationInputs& inputs);

// shared by the ablation table and the pipeline summary
AblationRow evaluate_embedding(const Matrix& z, const AblationInputs& inputs,
                               const std::string& name, std::uint64_t seed);

}  // namespace hugat::eval

#include "hugat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "hugat/metapath.hpp"

namespace hugat::eval {

Metrics regression_metrics(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size() || y.size() < 2)
        throw ShapeMismatch("metrics need equal lengths >= 2");
    const double n = static_cast<double>(y.size());
    double abs_sum = 0, sq_sum = 0, mean_y = 0;
    for (double v : y) mean_y += v;
    mean_y /= n;
    double ss_tot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - y_hat[i];
        abs_sum += std::abs(r);
        sq_sum += r * r;
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    if (ss_tot == 0) throw DegenerateTarget("constant target, R^2 undefined");
    return {abs_sum / n, std::sqrt(sq_sum / n), 1.0 - sq_sum / ss_tot};
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid(50);
    for (int i = 0; i < 50; ++i) grid[i] = std::pow(10.0, -4.0 + 6.0 * i / 49.0);
    return grid;
}

namespace {

struct Standardized {
    Matrix x;
    std::vector<double> mean, scale;
};

Standardized standardize(const Matrix& x) {
    const std::size_t n = x.rows(), p = x.cols();
    Standardized s{Matrix(n, p), std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0;
        for (std::size_t i = 0; i < n; ++i) m += x(i, j);
        m /= n;
        double var = 0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - m) * (x(i, j) - m);
        double sd = std::sqrt(var / n);
        if (sd == 0) sd = 1.0;  // constant column stays zero after centering
        s.mean[j] = m;
        s.scale[j] = sd;
        for (std::size_t i = 0; i < n; ++i) s.x(i, j) = (x(i, j) - m) / sd;
    }
    return s;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

std::vector<double> lasso_fit(const Matrix& x, const std::vector<double>& y, double lambda,
                              int max_iter, double tol) {
    const std::size_t n = x.rows(), p = x.cols();
    if (y.size() != n) throw ShapeMismatch("lasso target length");
    auto std_x = standardize(x);
    double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / n;

    std::vector<double> beta(p, 0.0);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - y_mean;

    // objective (1/2n)||r||^2 + lambda * ||beta||_1 on standardized columns
    for (int iter = 0; iter < max_iter; ++iter) {
        double max_delta = 0;
        for (std::size_t j = 0; j < p; ++j) {
            double rho = 0, col_sq = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double xij = std_x.x(i, j);
                rho += xij * (residual[i] + xij * beta[j]);
                col_sq += xij * xij;
            }
            if (col_sq == 0) continue;
            const double new_beta = soft_threshold(rho / n, lambda) / (col_sq / n);
            const double delta = new_beta - beta[j];
            if (delta != 0) {
                for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * std_x.x(i, j);
                beta[j] = new_beta;
            }
            max_delta = std::max(max_delta, std::abs(delta));
        }
        if (max_delta < tol) break;
    }

    // map back to original scale, intercept first
    std::vector<double> coefs(p + 1, 0.0);
    double intercept = y_mean;
    for (std::size_t j = 0; j < p; ++j) {
        coefs[j + 1] = beta[j] / std_x.scale[j];
        intercept -= coefs[j + 1] * std_x.mean[j];
    }
    coefs[0] = intercept;
    return coefs;
}

double lasso_predict(const std::vector<double>& coefs, const Matrix& x, std::size_t row) {
    double v = coefs[0];
    for (std::size_t j = 0; j < x.cols(); ++j) v += coefs[j + 1] * x(row, j);
    return v;
}

RegressionReport lasso_cv_fit(const Matrix& x, const std::vector<double>& y,
                              const LassoOptions& options, const std::string& task) {
    const std::size_t n = x.rows();
    if (y.size() != n) throw ShapeMismatch("lasso target length");
    if (static_cast<int>(n) < options.folds) throw Error("fewer samples than folds");
    for (double v : y)
        if (!std::isfinite(v)) throw NonFiniteValue("lasso target");

    const auto grid = options.lambda_grid.empty() ? default_lambda_grid() : options.lambda_grid;

    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[i] = static_cast<int>(i % options.folds);
    std::mt19937_64 rng(options.seed);
    std::shuffle(fold_of.begin(), fold_of.end(), rng);

    auto split = [&](int fold, Matrix& xtr, std::vector<double>& ytr, std::vector<std::size_t>& val) {
        std::vector<std::size_t> tr;
        for (std::size_t i = 0; i < n; ++i)
            (fold_of[i] == fold ? val : tr).push_back(i);
        xtr = Matrix(tr.size(), x.cols());
        ytr.resize(tr.size());
        for (std::size_t r = 0; r < tr.size(); ++r) {
            for (std::size_t j = 0; j < x.cols(); ++j) xtr(r, j) = x(tr[r], j);
            ytr[r] = y[tr[r]];
        }
    };

    double best_lambda = grid[0];
    double best_mse = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        double sq = 0;
        for (int fold = 0; fold < options.folds; ++fold) {
            Matrix xtr;
            std::vector<double> ytr;
            std::vector<std::size_t> val;
            split(fold, xtr, ytr, val);
            auto coefs = lasso_fit(xtr, ytr, lambda, options.max_iter, options.tol);
            for (std::size_t i : val) {
                const double r = y[i] - lasso_predict(coefs, x, i);
                sq += r * r;
            }
        }
        const double mse = sq / n;
        if (mse < best_mse) {
            best_mse = mse;
            best_lambda = lambda;
        }
    }

    // out-of-fold predictions at the chosen lambda
    std::vector<double> oof(n, 0.0);
    for (int fold = 0; fold < options.folds; ++fold) {
        Matrix xtr;
        std::vector<double> ytr;
        std::vector<std::size_t> val;
        split(fold, xtr, ytr, val);
        auto coefs = lasso_fit(xtr, ytr, best_lambda, options.max_iter, options.tol);
        for (std::size_t i : val) oof[i] = lasso_predict(coefs, x, i);
    }

    RegressionReport report;
    report.task = task;
    report.fold_of = fold_of;
    report.lambda = best_lambda;
    try {
        Metrics m = regression_metrics(y, oof);
        report.mae = m.mae;
        report.rmse = m.rmse;
        report.r2 = m.r2;
    } catch (const DegenerateTarget&) {
        double abs_sum = 0, sq = 0;
        for (std::size_t i = 0; i < n; ++i) {
            abs_sum += std::abs(y[i] - oof[i]);
            sq += (y[i] - oof[i]) * (y[i] - oof[i]);
        }
        report.mae = abs_sum / n;
        report.rmse = std::sqrt(sq / n);
        report.r2 = 0.0;
        report.degenerate_target = true;
    }
    return report;
}

RegressionReport flow_regression(const Matrix& z, const Matrix& distances,
                                 const std::vector<FlowObservation>& flows,
                                 const LassoOptions& options) {
    const std::size_t d = z.cols();
    Matrix x(flows.size(), 3 * d + 1);
    std::vector<double> y(flows.size());
    for (std::size_t r = 0; r < flows.size(); ++r) {
        const auto& f = flows[r];
        if (f.origin < 0 || f.dest < 0 || static_cast<std::size_t>(f.origin) >= z.rows() ||
            static_cast<std::size_t>(f.dest) >= z.rows())
            throw UnknownRegion("flow endpoint");
        const double dist = distances(f.origin, f.dest);
        if (!std::isfinite(dist)) throw MissingDistance(std::to_string(f.origin) + "->" +
                                                        std::to_string(f.dest));
        for (std::size_t j = 0; j < d; ++j) {
            x(r, j) = z(f.origin, j);
            x(r, d + j) = z(f.dest, j);
            x(r, 2 * d + j) = z(f.origin, j) * z(f.dest, j);
        }
        x(r, 3 * d) = dist;
        y[r] = f.count;
    }
    return lasso_cv_fit(x, y, options, "bike_flow");
}

namespace {

double sq_dist(const Matrix& z, std::size_t i, const std::vector<double>& c) {
    double s = 0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
        const double d = z(i, j) - c[j];
        s += d * d;
    }
    return s;
}

struct KmRun {
    std::vector<int> labels;
    double objective;
    std::vector<double> trace;
};

KmRun kmeans_once(const Matrix& z, int k, std::mt19937_64& rng) {
    const std::size_t n = z.rows(), d = z.cols();
    std::vector<std::vector<double>> centers;

    // k-means++ seeding
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t first = pick(rng);
    centers.push_back(std::vector<double>(z.data().begin() + first * d,
                                          z.data().begin() + (first + 1) * d));
    std::vector<double> min_d2(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, sq_dist(z, i, c));
            min_d2[i] = best;
            total += best;
        }
        std::size_t chosen = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng), acc = 0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (acc >= r) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.push_back(std::vector<double>(z.data().begin() + chosen * d,
                                              z.data().begin() + (chosen + 1) * d));
    }

    KmRun run;
    run.labels.assign(n, -1);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        double obj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(z, i, centers[0]);
            for (int c = 1; c < k; ++c) {
                const double dd = sq_dist(z, i, centers[c]);
                if (dd < bd) {
                    bd = dd;
                    best = c;
                }
            }
            obj += bd;
            if (run.labels[i] != best) {
                run.labels[i] = best;
                changed = true;
            }
        }
        run.trace.push_back(obj);
        run.objective = obj;
        if (!changed && iter > 0) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        std::vector<int> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            counts[run.labels[i]]++;
            for (std::size_t j = 0; j < d; ++j) sums[run.labels[i]][j] += z(i, j);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // move the empty center onto the farthest point
                std::size_t far = 0;
                double fd = -1;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dd = sq_dist(z, i, centers[run.labels[i]]);
                    if (dd > fd) {
                        fd = dd;
                        far = i;
                    }
                }
                for (std::size_t j = 0; j < d; ++j) centers[c][j] = z(far, j);
            } else {
                for (std::size_t j = 0; j < d; ++j) centers[c][j] = sums[c][j] / counts[c];
            }
        }
    }
    return run;
}

}  // namespace

ClusteringReport kmeans(const Matrix& z, int k, int restarts, std::uint64_t seed) {
    if (k <= 0 || static_cast<std::size_t>(k) > z.rows()) throw KTooLarge(std::to_string(k));
    ClusteringReport report;
    report.k = k;
    report.restarts = restarts;
    report.objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
        KmRun run = kmeans_once(z, k, rng);
        if (run.objective < report.objective) {
            report.objective = run.objective;
            report.labels = run.labels;
            report.objective_trace = run.trace;
        }
    }
    return report;
}

namespace {

struct Contingency {
    std::map<std::pair<int, int>, long> cells;
    std::map<int, long> row, col;
    long n = 0;
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ShapeMismatch("partition sizes");
    Contingency t;
    for (std::size_t i = 0; i < a.size(); ++i) {
        t.cells[{a[i], b[i]}]++;
        t.row[a[i]]++;
        t.col[b[i]]++;
        t.n++;
    }
    return t;
}

double entropy(const std::map<int, long>& counts, long n) {
    double h = 0;
    for (const auto& [label, c] : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace

double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    auto t = contingency(a, b);
    double mi = 0;
    for (const auto& [cell, c] : t.cells) {
        const double pij = static_cast<double>(c) / t.n;
        const double pi = static_cast<double>(t.row[cell.first]) / t.n;
        const double pj = static_cast<double>(t.col[cell.second]) / t.n;
        mi += pij * std::log(pij / (pi * pj));
    }
    const double denom = 0.5 * (entropy(t.row, t.n) + entropy(t.col, t.n));
    return denom > 0 ? mi / denom : 0.0;  // single-cluster degenerate case
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
    auto t = contingency(a, b);
    auto choose2 = [](long x) { return 0.5 * x * (x - 1); };
    double idx = 0, row_sum = 0, col_sum = 0;
    for (const auto& [cell, c] : t.cells) idx += choose2(c);
    for (const auto& [l, c] : t.row) row_sum += choose2(c);
    for (const auto& [l, c] : t.col) col_sum += choose2(c);
    const double total = choose2(t.n);
    const double expected = row_sum * col_sum / total;
    const double max_idx = 0.5 * (row_sum + col_sum);
    if (max_idx == expected) return 1.0;  // both partitions trivial
    return (idx - expected) / (max_idx - expected);
}

std::vector<int> nearest_neighbors(const Matrix& z, int region_id, int n) {
    const int total = static_cast<int>(z.rows());
    if (region_id < 0 || region_id >= total) throw UnknownRegion(std::to_string(region_id));
    if (n >= total) throw Error("n must be < number of regions");
    std::vector<std::pair<double, int>> dist;
    for (int j = 0; j < total; ++j) {
        if (j == region_id) continue;
        double s = 0;
        for (std::size_t c = 0; c < z.cols(); ++c) {
            const double d = z(region_id, c) - z(j, c);
            s += d * d;
        }
        dist.emplace_back(s, j);
    }
    std::sort(dist.begin(), dist.end());
    std::vector<int> out;
    for (int i = 0; i < n; ++i) out.push_back(dist[i].second);
    return out;
}

AblationRow evaluate_embedding(const Matrix& z, const AblationInputs& inputs,
                               const std::string& name, std::uint64_t seed) {
    AblationRow row;
    row.metapath_set = name;
    LassoOptions opts;
    opts.seed = seed;
    row.crime_r2 = lasso_cv_fit(z, inputs.crime, opts, "crime").r2;
    row.income_r2 = lasso_cv_fit(z, inputs.income, opts, "income").r2;
    row.flow_r2 = flow_regression(z, inputs.distances, inputs.flows, opts).r2;
    auto clustering = kmeans(z, inputs.clusters, 10, seed);
    row.nmi = nmi(clustering.labels, inputs.true_labels);
    return row;
}

std::vector<AblationRow> metapath_ablation(const HeterogeneousUrbanGraph& g,
                                           const RegionTargets& targets,
                                           const han::HanConfig& han_config,
                                           const train::TrainingConfig& cfg,
                                           const AblationInputs& inputs) {
    auto adjacencies = all_builtin_adjacencies(g);
    auto run_subset = [&](const std::vector<std::size_t>& subset, const std::string& name) {
        std::vector<MetaPathAdjacency> chosen;
        for (std::size_t i : subset) chosen.push_back(adjacencies[i]);
        auto ctx = han::make_context(g, chosen);
        auto result = train::train(ctx, targets, han_config, cfg, cfg.seed);
        return evaluate_embedding(result.embeddings, inputs, name, cfg.seed);
    };

    std::vector<AblationRow> rows;
    for (std::size_t i = 0; i < adjacencies.size(); ++i)
        rows.push_back(run_subset({i}, adjacencies[i].metapath.name));
    std::vector<std::size_t> prefix;
    std::string name;
    for (std::size_t i = 0; i < adjacencies.size(); ++i) {
        prefix.push_back(i);
        name += (i ? "+" : "") + adjacencies[i].metapath.name;
        rows.push_back(run_subset(prefix, name));
    }
    return rows;
}

}  // namespace hugat::eval

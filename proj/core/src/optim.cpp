#include "hugat/optim.hpp"

#include <algorithm>
#include <cmath>

namespace hugat::ad {

GradCheckReport gradient_check(const std::function<Var()>& f, const std::vector<Var>& params,
                               double h, double tol) {
    if (h <= 0) throw Error("gradient_check: h must be positive");

    // analytic pass
    for (const auto& p : params) p->zero_grad();
    Var loss = f();
    backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);

    GradCheckReport report;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = *params[k];
        for (std::size_t i = 0; i < p.val.size(); ++i) {
            const double orig = p.val[i];
            p.val[i] = orig + h;
            const double lp = f()->scalar();
            p.val[i] = orig - h;
            const double lm = f()->scalar();
            p.val[i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double ga = analytic[k][i];
            const double denom = std::max({1.0, std::abs(fd), std::abs(ga)});
            report.max_rel_error = std::max(report.max_rel_error, std::abs(fd - ga) / denom);
        }
    }
    report.pass = report.max_rel_error < tol;
    return report;
}

}  // namespace hugat::ad

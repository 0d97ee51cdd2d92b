#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hugat/ad.hpp"

namespace hugat::ad {

// Adam with bias correction, one moment pair per registered parameter.
class Adam {
public:
    explicit Adam(std::vector<Var> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& p : params_) {
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
    }

    void zero_grad() {
        for (auto& p : params_) p->zero_grad();
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = *params_[k];
            if (p.grad.size() != p.val.size()) throw ShapeMismatch("adam grad buffer");
            for (std::size_t i = 0; i < p.val.size(); ++i) {
                const double g = p.grad[i];
                m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
                v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
                const double mhat = m_[k][i] / bc1;
                const double vhat = v_[k][i] / bc2;
                p.val[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    std::int64_t step_count() const { return t_; }
    const std::vector<Var>& params() const { return params_; }

private:
    std::vector<Var> params_;
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    bool pass = false;
};

// Central finite differences against analytic gradients. f must rebuild the
// loss graph from the current parameter values on every call.
GradCheckReport gradient_check(const std::function<Var()>& f, const std::vector<Var>& params,
                               double h = 1e-5, double tol = 1e-4);

}  // namespace hugat::ad

#include "hugat/ad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#if defined(HUGAT_HAVE_MVEC) && defined(__AVX512F__)
#include <immintrin.h>
// glibc libmvec, x86-64 vector function ABI name for 8-lane double exp
extern "C" __m512d _ZGVeN8v_exp(__m512d);
#define HUGAT_VEXP8 1
#endif

namespace hugat::ad {

namespace {

Var make_node(std::size_t rows, std::size_t cols, std::vector<Var> parents) {
    auto t = std::make_shared<Tensor>();
    t->rows = rows;
    t->cols = cols;
    t->val.assign(rows * cols, 0.0);
    t->parents = std::move(parents);
    for (const auto& p : t->parents) {
        if (p->requires_grad) {
            t->requires_grad = true;
            break;
        }
    }
    if (t->requires_grad) t->grad.assign(rows * cols, 0.0);
    return t;
}

void check_finite(const Var& t, const char* op) {
    for (double x : t->val) {
        if (!std::isfinite(x)) throw NonFiniteValue(op);
    }
}

void require(bool cond, const char* msg) {
    if (!cond) throw ShapeMismatch(msg);
}

// dC contribution of C = A * B into A and B gradients, ikj order; the p-loop
// is unrolled by 4 so each load/store of the output row carries 4 FMAs
void matmul_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * m;
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            const double a0 = ai[p], a1 = ai[p + 1], a2 = ai[p + 2], a3 = ai[p + 3];
            if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
            const double* b0 = b + p * m;
            for (std::size_t j = 0; j < m; ++j)
                ci[j] += a0 * b0[j] + a1 * b0[m + j] + a2 * b0[2 * m + j] + a3 * b0[3 * m + j];
        }
        for (; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b + p * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
        }
    }
}

// acc += A^T * B where A is n x k, B is n x m, result k x m; the i-loop is
// unrolled by 4 so each load/store of an output row carries 4 FMAs
void matmul_at_b(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double* ai = a + i * k;
        const double* bi = b + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double a0 = ai[p], a1 = ai[k + p], a2 = ai[2 * k + p], a3 = ai[3 * k + p];
            if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
            double* cp = c + p * m;
            for (std::size_t j = 0; j < m; ++j)
                cp[j] += a0 * bi[j] + a1 * bi[m + j] + a2 * bi[2 * m + j] + a3 * bi[3 * m + j];
        }
    }
    for (; i < n; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            double* cp = c + p * m;
            for (std::size_t j = 0; j < m; ++j) cp[j] += aip * bi[j];
        }
    }
}

// four accumulators so the FMA chain is not latency-bound
double dot(const double* x, const double* y, std::size_t k) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
        s0 += x[p] * y[p];
        s1 += x[p + 1] * y[p + 1];
        s2 += x[p + 2] * y[p + 2];
        s3 += x[p + 3] * y[p + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; p < k; ++p) s += x[p] * y[p];
    return s;
}

// buf[t] <- exp(buf[t] - mx) in place; returns the sum of the results
double exp_shift_sum(double* buf, std::size_t len, double mx) {
    double z = 0.0;
    std::size_t t = 0;
#ifdef HUGAT_VEXP8
    const __m512d vmx = _mm512_set1_pd(mx);
    __m512d acc = _mm512_setzero_pd();
    for (; t + 8 <= len; t += 8) {
        const __m512d e = _ZGVeN8v_exp(_mm512_sub_pd(_mm512_loadu_pd(buf + t), vmx));
        _mm512_storeu_pd(buf + t, e);
        acc = _mm512_add_pd(acc, e);
    }
    z = _mm512_reduce_add_pd(acc);
#endif
    for (; t < len; ++t) {
        buf[t] = std::exp(buf[t] - mx);
        z += buf[t];
    }
    return z;
}

// acc += A * B^T where A is n x k, B is m x k, result n x m
void matmul_a_bt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * m;
        for (std::size_t j = 0; j < m; ++j) ci[j] += dot(ai, b + j * k, k);
    }
}

template <class F, class D>
Var unary(const Var& a, const char* name, F f, D dfdx /* (x, y) -> dy/dx */) {
    auto out = make_node(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < a->size(); ++i) out->val[i] = f(a->val[i]);
    check_finite(out, name);
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a;
        out->backprop = [o, pa, dfdx]() {
            for (std::size_t i = 0; i < pa->size(); ++i)
                pa->grad[i] += o->grad[i] * dfdx(pa->val[i], o->val[i]);
        };
    }
    return out;
}

}  // namespace

double Tensor::scalar() const {
    if (rows != 1 || cols != 1) throw NotScalar("tensor is " + std::to_string(rows) + "x" + std::to_string(cols));
    return val[0];
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

Var constant(std::size_t rows, std::size_t cols, double fill) {
    auto t = std::make_shared<Tensor>();
    t->rows = rows;
    t->cols = cols;
    t->val.assign(rows * cols, fill);
    return t;
}

Var constant(const Matrix& m) {
    auto t = constant(m.rows(), m.cols());
    t->val = m.data();
    return t;
}

Var param(std::size_t rows, std::size_t cols, double fill) {
    auto t = constant(rows, cols, fill);
    t->requires_grad = true;
    t->grad.assign(rows * cols, 0.0);
    return t;
}

Var param(const Matrix& m) {
    auto t = constant(m);
    t->requires_grad = true;
    t->grad.assign(t->size(), 0.0);
    return t;
}

Var matmul(const Var& a, const Var& b) {
    require(a->cols == b->rows, "matmul inner dims");
    auto out = make_node(a->rows, b->cols, {a, b});
    matmul_acc(a->val.data(), b->val.data(), out->val.data(), a->rows, a->cols, b->cols);
    check_finite(out, "matmul");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a, pb = b;
        out->backprop = [o, pa, pb]() {
            if (pa->requires_grad)
                matmul_a_bt(o->grad.data(), pb->val.data(), pa->grad.data(), o->rows, o->cols,
                            pa->cols);
            if (pb->requires_grad)
                matmul_at_b(pa->val.data(), o->grad.data(), pb->grad.data(), pa->rows, pa->cols,
                            o->cols);
        };
    }
    return out;
}

Var matmul_sparse_lhs(const Var& a, const Var& b) {
    require(a->cols == b->rows, "matmul inner dims");
    auto out = make_node(a->rows, b->cols, {a, b});
    matmul_acc(a->val.data(), b->val.data(), out->val.data(), a->rows, a->cols, b->cols);
    check_finite(out, "matmul");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a, pb = b;
        out->backprop = [o, pa, pb]() {
            if (pa->requires_grad) {
                // skip dA where A == 0: callers guarantee those gradients are
                // annihilated upstream (A is a masked-softmax output)
                const std::size_t n = o->rows, k = o->cols, m = pa->cols;
                const double* dc = o->grad.data();
                const double* bv = pb->val.data();
                const double* av = pa->val.data();
                double* da = pa->grad.data();
                for (std::size_t i = 0; i < n; ++i) {
                    const double* dci = dc + i * k;
                    for (std::size_t j = 0; j < m; ++j) {
                        if (av[i * m + j] == 0.0) continue;
                        da[i * m + j] += dot(dci, bv + j * k, k);
                    }
                }
            }
            if (pb->requires_grad)
                matmul_at_b(pa->val.data(), o->grad.data(), pb->grad.data(), pa->rows, pa->cols,
                            o->cols);
        };
    }
    return out;
}

Var masked_attention(const Var& u, const Var& v, const Matrix& mask, double slope) {
    require(u->cols == 1 && v->cols == 1, "masked_attention expects column vectors");
    require(mask.rows() == u->rows && mask.cols() == v->rows, "mask shape");
    const std::size_t n = u->rows, m = v->rows;
    auto out = make_node(n, m, {u, v});
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u->val[i];
        double* oi = out->val.data() + i * m;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            if (mask(i, j) == 0.0) continue;
            const double s = ui + v->val[j];
            mx = std::max(mx, s > 0 ? s : slope * s);
        }
        if (mx == -std::numeric_limits<double>::infinity())
            throw Error("masked_attention: empty neighbor set in row " + std::to_string(i));
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (mask(i, j) == 0.0) continue;
            const double s = ui + v->val[j];
            oi[j] = std::exp((s > 0 ? s : slope * s) - mx);
            z += oi[j];
        }
        for (std::size_t j = 0; j < m; ++j) oi[j] /= z;
    }
    check_finite(out, "masked_attention");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pu = u, pv = v;
        out->backprop = [o, pu, pv, slope]() {
            // alpha == 0 exactly on masked entries, so the output doubles as
            // the mask; chain rule of softmax then leaky_relu then outer sum
            const std::size_t n = o->rows, m = o->cols;
            for (std::size_t i = 0; i < n; ++i) {
                const double* yi = o->val.data() + i * m;
                const double* dyi = o->grad.data() + i * m;
                const double ui = pu->val[i];
                double d = 0.0;
                for (std::size_t j = 0; j < m; ++j) d += dyi[j] * yi[j];
                double dui = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    if (yi[j] == 0.0) continue;
                    const double ds = yi[j] * (dyi[j] - d);
                    const double g = (ui + pv->val[j]) > 0 ? ds : slope * ds;
                    dui += g;
                    if (pv->requires_grad) pv->grad[j] += g;
                }
                if (pu->requires_grad) pu->grad[i] += dui;
            }
        };
    }
    return out;
}

Var attention_aggregate_heads(const Var& h, const Var& u, const Var& v,
                              std::shared_ptr<const NeighborLists> neighbors, double slope) {
    require(u->rows == h->rows && v->rows == h->rows, "attention_aggregate_heads row counts");
    require(u->cols == v->cols, "attention_aggregate_heads head counts");
    require(neighbors && neighbors->size() == h->rows, "neighbor list count");
    const std::size_t n = h->rows, d = h->cols, K = u->cols;
    auto out = make_node(n, K * d, {h, u, v});

    // compact alpha over the neighbor lists, head-major within each row
    // (entry index offsets[i] + k * deg_i + t), shared with backward
    std::vector<std::size_t> offsets(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        offsets[i + 1] = offsets[i] + K * (*neighbors)[i].size();
    auto alpha = std::make_shared<std::vector<double>>(offsets[n]);
    // u, v transposed to K x n so per-head passes are contiguous
    auto ut = std::make_shared<std::vector<double>>(K * n);
    auto vt = std::make_shared<std::vector<double>>(K * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < K; ++k) {
            (*ut)[k * n + j] = u->val[j * K + k];
            (*vt)[k * n + j] = v->val[j * K + k];
        }

    const double* hv = h->val.data();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nb = (*neighbors)[i];
        if (nb.empty())
            throw Error("attention_aggregate_heads: empty neighbor set in row " +
                        std::to_string(i));
        const std::size_t deg = nb.size();
        double* oi = out->val.data() + i * K * d;
        for (std::size_t k = 0; k < K; ++k) {
            const double uik = (*ut)[k * n + i];
            const double* vk = vt->data() + k * n;
            double* ak = alpha->data() + offsets[i] + k * deg;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < deg; ++t) {
                double s = uik + vk[nb[t]];
                s = s > 0 ? s : slope * s;
                ak[t] = s;
                mx = std::max(mx, s);
            }
            const double z = exp_shift_sum(ak, deg, mx);
            double* ok = oi + k * d;
            std::size_t t = 0;
            for (; t + 4 <= deg; t += 4) {  // 4 neighbors per output-row pass
                const double a0 = ak[t] / z, a1 = ak[t + 1] / z, a2 = ak[t + 2] / z,
                             a3 = ak[t + 3] / z;
                ak[t] = a0, ak[t + 1] = a1, ak[t + 2] = a2, ak[t + 3] = a3;
                const double* h0 = hv + nb[t] * d;
                const double* h1 = hv + nb[t + 1] * d;
                const double* h2 = hv + nb[t + 2] * d;
                const double* h3 = hv + nb[t + 3] * d;
                for (std::size_t c = 0; c < d; ++c)
                    ok[c] += a0 * h0[c] + a1 * h1[c] + a2 * h2[c] + a3 * h3[c];
            }
            for (; t < deg; ++t) {
                ak[t] /= z;
                const double* hj = hv + nb[t] * d;
                for (std::size_t c = 0; c < d; ++c) ok[c] += ak[t] * hj[c];
            }
        }
    }
    check_finite(out, "attention_aggregate_heads");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var ph = h, pu = u, pv = v;
        auto offs = std::make_shared<std::vector<std::size_t>>(std::move(offsets));
        out->backprop = [o, ph, pu, pv, neighbors, alpha, offs, ut, vt, slope]() {
            const std::size_t n = ph->rows, d = ph->cols, K = pu->cols;
            const double* hv = ph->val.data();
            double* hg = ph->requires_grad ? ph->grad.data() : nullptr;
            std::vector<double> da;            // d(loss)/d(alpha), one head at a time
            std::vector<double> dut(K * n, 0.0);  // transposed score grads, scattered at end
            std::vector<double> dvt(K * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& nb = (*neighbors)[i];
                const std::size_t deg = nb.size();
                const double* ai = alpha->data() + (*offs)[i];
                const double* dyi = o->grad.data() + i * K * d;
                da.resize(deg);
                for (std::size_t k = 0; k < K; ++k) {
                    const double* ak = ai + k * deg;
                    const double* dyk = dyi + k * d;
                    double dsum = 0.0;
                    // alpha grad (dot) and h grad (saxpy) share the dy row load;
                    // two neighbors per pass so the FMA chains overlap
                    std::size_t t = 0;
                    for (; hg && t + 2 <= deg; t += 2) {
                        const double* __restrict h0 = hv + nb[t] * d;
                        const double* __restrict h1 = hv + nb[t + 1] * d;
                        double* __restrict g0 = hg + nb[t] * d;
                        double* __restrict g1 = hg + nb[t + 1] * d;
                        const double a0 = ak[t], a1 = ak[t + 1];
                        double s0 = 0.0, s1 = 0.0;
                        for (std::size_t c = 0; c < d; ++c) {
                            const double w = dyk[c];
                            s0 += w * h0[c];
                            s1 += w * h1[c];
                            g0[c] += a0 * w;
                            g1[c] += a1 * w;
                        }
                        da[t] = s0;
                        da[t + 1] = s1;
                        dsum += s0 * a0 + s1 * a1;
                    }
                    for (; t < deg; ++t) {
                        const std::size_t j = nb[t];
                        const double* hj = hv + j * d;
                        double s = 0.0;
                        if (hg) {
                            const double a = ak[t];
                            double* gj = hg + j * d;
                            for (std::size_t c = 0; c < d; ++c) {
                                s += dyk[c] * hj[c];
                                gj[c] += a * dyk[c];
                            }
                        } else {
                            s = dot(dyk, hj, d);
                        }
                        da[t] = s;
                        dsum += s * ak[t];
                    }
                    // softmax then leaky_relu then (u_ik + v_jk) chain rule
                    const double uik = (*ut)[k * n + i];
                    const double* vk = vt->data() + k * n;
                    double* dvk = dvt.data() + k * n;
                    double du = 0.0;
                    for (std::size_t t = 0; t < deg; ++t) {
                        const std::size_t j = nb[t];
                        const double ds = ak[t] * (da[t] - dsum);
                        const double g = (uik + vk[j]) > 0 ? ds : slope * ds;
                        du += g;
                        dvk[j] += g;
                    }
                    dut[k * n + i] += du;
                }
            }
            if (pu->requires_grad)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t k = 0; k < K; ++k)
                        pu->grad[j * K + k] += dut[k * n + j];
            if (pv->requires_grad)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t k = 0; k < K; ++k)
                        pv->grad[j * K + k] += dvt[k * n + j];
        };
    }
    return out;
}

Var transpose(const Var& a) {
    auto out = make_node(a->cols, a->rows, {a});
    for (std::size_t i = 0; i < a->rows; ++i)
        for (std::size_t j = 0; j < a->cols; ++j) out->v(j, i) = a->v(i, j);
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a;
        out->backprop = [o, pa]() {
            for (std::size_t i = 0; i < pa->rows; ++i)
                for (std::size_t j = 0; j < pa->cols; ++j)
                    pa->grad[i * pa->cols + j] += o->grad[j * o->cols + i];
        };
    }
    return out;
}

Var add(const Var& a, const Var& b) {
    require(a->rows == b->rows && a->cols == b->cols, "add shapes");
    auto out = make_node(a->rows, a->cols, {a, b});
    for (std::size_t i = 0; i < a->size(); ++i) out->val[i] = a->val[i] + b->val[i];
    check_finite(out, "add");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a, pb = b;
        out->backprop = [o, pa, pb]() {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pa->grad[i] += o->grad[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pb->grad[i] += o->grad[i];
        };
    }
    return out;
}

Var sub(const Var& a, const Var& b) {
    require(a->rows == b->rows && a->cols == b->cols, "sub shapes");
    auto out = make_node(a->rows, a->cols, {a, b});
    for (std::size_t i = 0; i < a->size(); ++i) out->val[i] = a->val[i] - b->val[i];
    check_finite(out, "sub");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a, pb = b;
        out->backprop = [o, pa, pb]() {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pa->grad[i] += o->grad[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pb->grad[i] -= o->grad[i];
        };
    }
    return out;
}

Var mul(const Var& a, const Var& b) {
    require(a->rows == b->rows && a->cols == b->cols, "mul shapes");
    auto out = make_node(a->rows, a->cols, {a, b});
    for (std::size_t i = 0; i < a->size(); ++i) out->val[i] = a->val[i] * b->val[i];
    check_finite(out, "mul");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a, pb = b;
        out->backprop = [o, pa, pb]() {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pa->grad[i] += o->grad[i] * pb->val[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pb->grad[i] += o->grad[i] * pa->val[i];
        };
    }
    return out;
}

Var scalar_mul(const Var& a, double c) {
    return unary(a, "scalar_mul", [c](double x) { return c * x; },
                 [c](double, double) { return c; });
}

Var mul_by_entry(const Var& a, const Var& s, std::size_t idx) {
    require(idx < s->size(), "mul_by_entry index");
    auto out = make_node(a->rows, a->cols, {a, s});
    const double sv = s->val[idx];
    for (std::size_t i = 0; i < a->size(); ++i) out->val[i] = a->val[i] * sv;
    check_finite(out, "mul_by_entry");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a, ps = s;
        out->backprop = [o, pa, ps, idx, sv]() {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pa->grad[i] += o->grad[i] * sv;
            if (ps->requires_grad) {
                double acc = 0.0;
                for (std::size_t i = 0; i < o->size(); ++i) acc += o->grad[i] * pa->val[i];
                ps->grad[idx] += acc;
            }
        };
    }
    return out;
}

Var add_row_broadcast(const Var& a, const Var& bias) {
    require(bias->rows == 1 && bias->cols == a->cols, "row broadcast shape");
    auto out = make_node(a->rows, a->cols, {a, bias});
    for (std::size_t i = 0; i < a->rows; ++i)
        for (std::size_t j = 0; j < a->cols; ++j) out->v(i, j) = a->v(i, j) + bias->val[j];
    check_finite(out, "add_row_broadcast");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a, pb = bias;
        out->backprop = [o, pa, pb]() {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < o->size(); ++i) pa->grad[i] += o->grad[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < o->rows; ++i)
                    for (std::size_t j = 0; j < o->cols; ++j)
                        pb->grad[j] += o->grad[i * o->cols + j];
        };
    }
    return out;
}

Var concat_cols(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat of nothing");
    std::size_t rows = parts[0]->rows, cols = 0;
    for (const auto& p : parts) {
        require(p->rows == rows, "concat row counts");
        cols += p->cols;
    }
    auto out = make_node(rows, cols, parts);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < p->cols; ++j) out->v(i, off + j) = p->v(i, j);
        off += p->cols;
    }
    if (out->requires_grad) {
        Tensor* o = out.get();
        std::vector<Var> ps = parts;
        out->backprop = [o, ps]() {
            std::size_t off = 0;
            for (const auto& p : ps) {
                if (p->requires_grad) {
                    for (std::size_t i = 0; i < p->rows; ++i)
                        for (std::size_t j = 0; j < p->cols; ++j)
                            p->grad[i * p->cols + j] += o->grad[i * o->cols + off + j];
                }
                off += p->cols;
            }
        };
    }
    return out;
}

Var row_gather(const Var& a, const std::vector<std::size_t>& rows) {
    for (std::size_t r : rows) require(r < a->rows, "row_gather index");
    auto out = make_node(rows.size(), a->cols, {a});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < a->cols; ++j) out->v(i, j) = a->v(rows[i], j);
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a;
        std::vector<std::size_t> idx = rows;
        out->backprop = [o, pa, idx]() {
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = 0; j < o->cols; ++j)
                    pa->grad[idx[i] * pa->cols + j] += o->grad[i * o->cols + j];
        };
    }
    return out;
}

Var outer_sum(const Var& u, const Var& v) {
    require(u->cols == 1 && v->cols == 1, "outer_sum expects column vectors");
    auto out = make_node(u->rows, v->rows, {u, v});
    for (std::size_t i = 0; i < u->rows; ++i)
        for (std::size_t j = 0; j < v->rows; ++j) out->v(i, j) = u->val[i] + v->val[j];
    check_finite(out, "outer_sum");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pu = u, pv = v;
        out->backprop = [o, pu, pv]() {
            if (pu->requires_grad)
                for (std::size_t i = 0; i < o->rows; ++i)
                    for (std::size_t j = 0; j < o->cols; ++j) pu->grad[i] += o->g(i, j);
            if (pv->requires_grad)
                for (std::size_t i = 0; i < o->rows; ++i)
                    for (std::size_t j = 0; j < o->cols; ++j) pv->grad[j] += o->g(i, j);
        };
    }
    return out;
}

Var row_sum(const Var& a) {
    auto out = make_node(a->rows, 1, {a});
    for (std::size_t i = 0; i < a->rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a->cols; ++j) s += a->v(i, j);
        out->val[i] = s;
    }
    check_finite(out, "row_sum");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a;
        out->backprop = [o, pa]() {
            for (std::size_t i = 0; i < pa->rows; ++i)
                for (std::size_t j = 0; j < pa->cols; ++j)
                    pa->grad[i * pa->cols + j] += o->grad[i];
        };
    }
    return out;
}

namespace {

// shared forward/backward for full-row and masked softmax
Var softmax_impl(const Var& a, const Matrix* mask) {
    if (mask) require(mask->rows() == a->rows && mask->cols() == a->cols, "mask shape");
    auto out = make_node(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < a->rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < a->cols; ++j)
            if (!mask || (*mask)(i, j) != 0.0) mx = std::max(mx, a->v(i, j));
        if (mx == -std::numeric_limits<double>::infinity())
            throw Error("softmax: empty neighbor set in row " + std::to_string(i));
        double z = 0.0;
        for (std::size_t j = 0; j < a->cols; ++j) {
            if (!mask || (*mask)(i, j) != 0.0) {
                out->v(i, j) = std::exp(a->v(i, j) - mx);
                z += out->v(i, j);
            }
        }
        for (std::size_t j = 0; j < a->cols; ++j) out->v(i, j) /= z;
    }
    check_finite(out, "softmax");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a;
        out->backprop = [o, pa]() {
            // dy/dx for softmax row: dx = y * (dy - <dy, y>)
            for (std::size_t i = 0; i < o->rows; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < o->cols; ++j)
                    dot += o->g(i, j) * o->v(i, j);
                for (std::size_t j = 0; j < o->cols; ++j)
                    pa->grad[i * pa->cols + j] += o->v(i, j) * (o->grad[i * o->cols + j] - dot);
            }
        };
    }
    return out;
}

}  // namespace

Var softmax_rows(const Var& a) { return softmax_impl(a, nullptr); }

Var masked_softmax_rows(const Var& a, const Matrix& mask) { return softmax_impl(a, &mask); }

Var softmax_cols(const Var& a) {
    auto out = make_node(a->rows, a->cols, {a});
    const std::size_t n = a->rows, m = a->cols;
    for (std::size_t j = 0; j < m; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, a->val[i * m + j]);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out->val[i * m + j] = std::exp(a->val[i * m + j] - mx);
            z += out->val[i * m + j];
        }
        for (std::size_t i = 0; i < n; ++i) out->val[i * m + j] /= z;
    }
    check_finite(out, "softmax");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a;
        out->backprop = [o, pa]() {
            const std::size_t n = o->rows, m = o->cols;
            for (std::size_t j = 0; j < m; ++j) {
                double d = 0.0;
                for (std::size_t i = 0; i < n; ++i) d += o->grad[i * m + j] * o->val[i * m + j];
                for (std::size_t i = 0; i < n; ++i)
                    pa->grad[i * m + j] += o->val[i * m + j] * (o->grad[i * m + j] - d);
            }
        };
    }
    return out;
}

Var kl_div_const(const Matrix& p, const Var& p_hat, double eps) {
    require(p.rows() == p_hat->rows && p.cols() == p_hat->cols, "kl shapes");
    auto out = make_node(1, 1, {p_hat});
    const double* pv = p.data().data();
    double acc = 0.0;
    for (std::size_t i = 0; i < p_hat->size(); ++i) {
        if (pv[i] == 0.0) continue;  // 0 * log(0/q) contributes 0
        acc += pv[i] * (std::log(std::max(pv[i], eps)) - std::log(std::max(p_hat->val[i], eps)));
    }
    out->val[0] = acc;
    check_finite(out, "kl_div");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pq = p_hat;
        std::vector<double> pc = p.data();
        out->backprop = [o, pq, pc, eps]() {
            const double g = o->grad[0];
            for (std::size_t i = 0; i < pq->size(); ++i)
                if (pc[i] != 0.0) pq->grad[i] -= g * pc[i] / std::max(pq->val[i], eps);
        };
    }
    return out;
}

Var hellinger_gap_sq(const Var& gram, const Var& norms, const Matrix& target, double eps) {
    const std::size_t n = gram->rows;
    require(gram->cols == n, "gram must be square");
    require(norms->rows == n && norms->cols == 1, "norms must be n x 1");
    require(target.rows() == n && target.cols() == n, "target shape");
    // sum over i != j of (target_ij - sqrt(max(0.5*(n_i + n_j - 2 g_ij), 0)))^2
    auto out = make_node(1, 1, {gram, norms});
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double x = 0.5 * (norms->val[i] + norms->val[j] - 2.0 * gram->v(i, j));
            const double e = target(i, j) - std::sqrt(std::max(x, 0.0));
            acc += e * e;
        }
    }
    out->val[0] = acc;
    check_finite(out, "hellinger_gap_sq");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pg = gram, pn = norms;
        std::vector<double> tv = target.data();
        out->backprop = [o, pg, pn, tv, eps]() {
            const std::size_t n = pg->rows;
            const double g0 = o->grad[0];
            for (std::size_t i = 0; i < n; ++i) {
                double dni = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (i == j) continue;
                    const double x =
                        0.5 * (pn->val[i] + pn->val[j] - 2.0 * pg->val[i * n + j]);
                    const double e = tv[i * n + j] - std::sqrt(std::max(x, 0.0));
                    // d/dx of (t - sqrt(x))^2 with the clamped-sqrt derivative
                    const double t = g0 * (-2.0 * e) * 0.5 / std::sqrt(std::max(x, eps));
                    pg->grad[i * n + j] += -t;
                    dni += 0.5 * t;
                    pn->grad[j] += 0.5 * t;
                }
                pn->grad[i] += dni;
            }
        };
    }
    return out;
}

Var tanh_op(const Var& a) {
    return unary(a, "tanh", [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var elu(const Var& a) {
    return unary(a, "elu", [](double x) { return x > 0 ? x : std::expm1(x); },
                 [](double x, double y) { return x > 0 ? 1.0 : y + 1.0; });
}

Var leaky_relu(const Var& a, double slope) {
    return unary(a, "leaky_relu", [slope](double x) { return x > 0 ? x : slope * x; },
                 [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var exp_op(const Var& a) {
    return unary(a, "exp", [](double x) { return std::exp(x); },
                 [](double, double y) { return y; });
}

Var log_clamped(const Var& a, double eps) {
    return unary(a, "log", [eps](double x) { return std::log(std::max(x, eps)); },
                 [eps](double x, double) { return 1.0 / std::max(x, eps); });
}

Var sqrt_clamped(const Var& a, double eps) {
    return unary(a, "sqrt", [](double x) { return std::sqrt(std::max(x, 0.0)); },
                 [eps](double x, double) { return 0.5 / std::sqrt(std::max(x, eps)); });
}

Var square(const Var& a) {
    return unary(a, "square", [](double x) { return x * x; },
                 [](double x, double) { return 2.0 * x; });
}

Var sum(const Var& a) {
    auto out = make_node(1, 1, {a});
    double s = 0.0;
    for (double x : a->val) s += x;
    out->val[0] = s;
    check_finite(out, "sum");
    if (out->requires_grad) {
        Tensor* o = out.get();
        Var pa = a;
        out->backprop = [o, pa]() {
            for (std::size_t i = 0; i < pa->size(); ++i) pa->grad[i] += o->grad[0];
        };
    }
    return out;
}

Var mean(const Var& a) {
    return scalar_mul(sum(a), 1.0 / static_cast<double>(a->size()));
}

void backward(const Var& loss) {
    if (loss->rows != 1 || loss->cols != 1) throw NotScalar("backward target");
    // iterative DFS topological order
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> seen;
    std::vector<std::pair<Tensor*, std::size_t>> stack{{loss.get(), 0}};
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    if (!loss->requires_grad) return;
    loss->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop();
    }
}

}  // namespace hugat::ad

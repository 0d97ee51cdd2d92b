#pragma once

// Minimal dense reverse-mode autodiff. Tensors are 2-D, 64-bit float, and
// immutable once created; every op returns a fresh node holding a backward
// closure. backward() runs the recorded closures in reverse topological
// order exactly once per node.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hugat/error.hpp"
#include "hugat/matrix.hpp"

namespace hugat::ad {

struct Tensor;
using Var = std::shared_ptr<Tensor>;

struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;

    std::vector<Var> parents;
    std::function<void()> backprop;  // accumulates this->grad into parents

    std::size_t size() const { return rows * cols; }
    double& v(std::size_t i, std::size_t j) { return val[i * cols + j]; }
    double v(std::size_t i, std::size_t j) const { return val[i * cols + j]; }
    double& g(std::size_t i, std::size_t j) { return grad[i * cols + j]; }

    double scalar() const;
    void zero_grad();
};

// leaf constructors
Var constant(std::size_t rows, std::size_t cols, double fill = 0.0);
Var constant(const Matrix& m);
Var param(std::size_t rows, std::size_t cols, double fill = 0.0);
Var param(const Matrix& m);

// primitives
Var matmul(const Var& a, const Var& b);
// matmul whose backward skips dA entries where A == 0; only valid when those
// gradients are annihilated downstream of A (e.g. A is a masked-softmax output)
Var matmul_sparse_lhs(const Var& a, const Var& b);
// row softmax of leaky_relu(u_i + v_j) restricted to mask != 0; fused
// equivalent of masked_softmax_rows(leaky_relu(outer_sum(u, v)), mask)
Var masked_attention(const Var& u, const Var& v, const Matrix& mask, double slope);
// multi-head attention as in masked_attention, immediately aggregated without
// materializing the n x n weight matrices: u, v are n x K per-head score
// columns, and head k of the n x (K * head_dim) output is
// out_i[k] = sum_{j in neighbors[i]} alpha^k_ij * h_j
using NeighborLists = std::vector<std::vector<std::size_t>>;
Var attention_aggregate_heads(const Var& h, const Var& u, const Var& v,
                              std::shared_ptr<const NeighborLists> neighbors, double slope);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);                // elementwise
Var scalar_mul(const Var& a, double c);
Var mul_by_entry(const Var& a, const Var& s, std::size_t idx);  // a * s.val[idx]
Var add_row_broadcast(const Var& a, const Var& bias);           // bias is 1 x cols
Var concat_cols(const std::vector<Var>& parts);
Var row_gather(const Var& a, const std::vector<std::size_t>& rows);
Var outer_sum(const Var& u, const Var& v);          // u: n x 1, v: m x 1 -> n x m
Var row_sum(const Var& a);                          // n x m -> n x 1
Var softmax_rows(const Var& a);
Var softmax_cols(const Var& a);
Var masked_softmax_rows(const Var& a, const Matrix& mask);  // mask entries in {0,1}
// sum_ij p_ij * (log p_ij - log max(p_hat_ij, eps)); p is a fixed distribution
Var kl_div_const(const Matrix& p, const Var& p_hat, double eps = 1e-12);
// sum over i != j of (target_ij - sqrt(max(0.5*(norms_i + norms_j - 2*gram_ij), 0)))^2,
// the squared gap between target distances and the Hellinger distances implied
// by a Gram matrix of root-probability vectors and their squared norms
Var hellinger_gap_sq(const Var& gram, const Var& norms, const Matrix& target,
                     double eps = 1e-12);
Var tanh_op(const Var& a);
Var elu(const Var& a);
Var leaky_relu(const Var& a, double slope = 0.2);
Var exp_op(const Var& a);
Var log_clamped(const Var& a, double eps = 1e-12);
Var sqrt_clamped(const Var& a, double eps = 1e-12);
Var square(const Var& a);
Var sum(const Var& a);   // -> 1 x 1
Var mean(const Var& a);  // -> 1 x 1

// Populates grads of every reachable requires_grad tensor. loss must be 1x1.
void backward(const Var& loss);

}  // namespace hugat::ad

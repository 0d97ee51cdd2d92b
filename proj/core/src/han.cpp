#include "hugat/han.hpp"

#include <cmath>
#include <random>

namespace hugat::han {

using ad::Var;

std::vector<Var> HanParameters::all() const {
    std::vector<Var> out;
    for (const auto& [t, v] : proj) out.push_back(v);
    for (const auto& heads : node_attn)
        for (const auto& a : heads) out.push_back(a);
    out.push_back(sem_W);
    out.push_back(sem_b);
    out.push_back(sem_q);
    out.push_back(dense_W);
    out.push_back(dense_b);
    return out;
}

std::vector<std::pair<std::string, Var>> HanParameters::named() const {
    std::vector<std::pair<std::string, Var>> out;
    for (const auto& [t, v] : proj) out.emplace_back("proj." + to_string(t), v);
    for (std::size_t m = 0; m < node_attn.size(); ++m)
        for (std::size_t h = 0; h < node_attn[m].size(); ++h)
            out.emplace_back("attn." + metapath_names[m] + ".h" + std::to_string(h),
                             node_attn[m][h]);
    out.emplace_back("sem_W", sem_W);
    out.emplace_back("sem_b", sem_b);
    out.emplace_back("sem_q", sem_q);
    out.emplace_back("dense_W", dense_W);
    out.emplace_back("dense_b", dense_b);
    return out;
}

namespace {

Var glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> unif(-bound, bound);
    Var t = ad::param(rows, cols);
    for (double& x : t->val) x = unif(rng);
    return t;
}

// score(i,j) = leaky_relu(a_src . h'_i + a_dst . h'_j); returns the two
// per-node score columns u_i = a_src . h'_i and v_j = a_dst . h'_j
std::pair<Var, Var> attention_scores(const Var& projected, const Var& attn_vec) {
    const std::size_t dh = projected->cols;
    std::vector<std::size_t> src(dh), dst(dh);
    for (std::size_t i = 0; i < dh; ++i) {
        src[i] = i;
        dst[i] = dh + i;
    }
    return {ad::matmul(projected, ad::row_gather(attn_vec, src)),
            ad::matmul(projected, ad::row_gather(attn_vec, dst))};
}

std::shared_ptr<const ad::NeighborLists> neighbor_lists_of(const Matrix& mask) {
    auto lists = std::make_shared<ad::NeighborLists>(mask.rows());
    for (std::size_t i = 0; i < mask.rows(); ++i)
        for (std::size_t j = 0; j < mask.cols(); ++j)
            if (mask(i, j) != 0.0) (*lists)[i].push_back(j);
    return lists;
}

}  // namespace

HanParameters init_parameters(const HanConfig& config,
                              const std::vector<std::string>& metapath_names,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    HanParameters p;
    p.config = config;
    p.metapath_names = metapath_names;
    for (NodeType t : kNodeTypes)
        p.proj[t] = glorot(config.head_dim, config.feature_dim, rng);
    for (std::size_t m = 0; m < metapath_names.size(); ++m) {
        std::vector<Var> heads;
        for (int h = 0; h < config.heads; ++h)
            heads.push_back(glorot(2 * static_cast<std::size_t>(config.head_dim), 1, rng));
        p.node_attn.push_back(std::move(heads));
    }
    p.sem_W = glorot(config.semantic_dim, config.hidden(), rng);
    p.sem_b = ad::param(1, config.semantic_dim);
    p.sem_q = glorot(config.semantic_dim, 1, rng);
    p.dense_W = glorot(config.out_dim, config.hidden(), rng);
    p.dense_b = ad::param(1, config.out_dim);
    return p;
}

HanContext make_context(const HeterogeneousUrbanGraph& g,
                        const std::vector<MetaPathAdjacency>& adjacencies) {
    HanContext ctx;
    auto it = g.features.find(NodeType::Region);
    if (it == g.features.end()) throw Error("graph has no region features");
    ctx.region_features = it->second;
    const int n = g.region_count();
    for (const auto& adj : adjacencies) ctx.masks.push_back(adjacency_mask(adj, n));
    for (const auto& mask : ctx.masks) ctx.neighbors.push_back(neighbor_lists_of(mask));
    return ctx;
}

std::map<NodeType, Matrix> project_features(const HeterogeneousUrbanGraph& g,
                                            const HanParameters& params) {
    std::map<NodeType, Matrix> out;
    for (NodeType t : kNodeTypes) {
        auto fit = g.features.find(t);
        if (fit == g.features.end()) continue;
        Var h = ad::constant(fit->second);
        Var proj = ad::matmul(h, ad::transpose(params.proj.at(t)));
        Matrix m(proj->rows, proj->cols);
        m.data() = proj->val;
        out[t] = std::move(m);
    }
    return out;
}

Var node_level_attention(const Var& projected, const Matrix& mask, const Var& attn_vec,
                         double leaky_slope) {
    const std::size_t dh = projected->cols;
    if (attn_vec->rows != 2 * dh || attn_vec->cols != 1)
        throw ShapeMismatch("attention vector must be 2*head_dim x 1");
    for (std::size_t i = 0; i < mask.rows(); ++i) {
        bool any = false;
        for (std::size_t j = 0; j < mask.cols(); ++j) any |= mask(i, j) != 0.0;
        if (!any) throw Error("empty neighbor set for region " + std::to_string(i));
    }
    auto [u, v] = attention_scores(projected, attn_vec);
    return ad::masked_attention(u, v, mask, leaky_slope);
}

Var metapath_aggregate(const Var& projected, const std::vector<Var>& alphas) {
    std::vector<Var> heads;
    heads.reserve(alphas.size());
    for (const auto& alpha : alphas)
        heads.push_back(ad::elu(ad::matmul_sparse_lhs(alpha, projected)));
    return ad::concat_cols(heads);
}

std::pair<Var, Var> semantic_attention(const std::vector<Var>& ys, const HanParameters& params) {
    if (ys.empty()) throw ShapeMismatch("semantic attention over empty meta-path set");
    std::vector<Var> scores;
    Var wt = ad::transpose(params.sem_W);
    for (const auto& y : ys) {
        Var t = ad::tanh_op(ad::add_row_broadcast(ad::matmul(y, wt), params.sem_b));
        scores.push_back(ad::mean(ad::matmul(t, params.sem_q)));
    }
    Var w = ad::concat_cols(scores);      // 1 x P
    Var beta = ad::softmax_rows(w);
    Var fused = ad::mul_by_entry(ys[0], beta, 0);
    for (std::size_t k = 1; k < ys.size(); ++k)
        fused = ad::add(fused, ad::mul_by_entry(ys[k], beta, k));
    return {beta, fused};
}

ForwardResult forward(const HanContext& ctx, const HanParameters& params) {
    if (ctx.masks.size() != params.node_attn.size())
        throw ShapeMismatch("mask count != meta-path count in parameters");
    Var features = ad::constant(ctx.region_features);
    Var projected = ad::matmul(features, ad::transpose(params.proj.at(NodeType::Region)));

    std::vector<Var> ys;
    for (std::size_t m = 0; m < ctx.masks.size(); ++m) {
        auto neighbors = m < ctx.neighbors.size() && ctx.neighbors[m]
                             ? ctx.neighbors[m]
                             : neighbor_lists_of(ctx.masks[m]);
        std::vector<Var> us, vs;
        us.reserve(params.node_attn[m].size());
        vs.reserve(params.node_attn[m].size());
        for (const auto& a : params.node_attn[m]) {
            auto [u, v] = attention_scores(projected, a);
            us.push_back(u);
            vs.push_back(v);
        }
        ys.push_back(ad::elu(ad::attention_aggregate_heads(
            projected, ad::concat_cols(us), ad::concat_cols(vs), neighbors,
            params.config.leaky_slope)));
    }
    auto [beta, fused] = semantic_attention(ys, params);
    Var z = ad::add_row_broadcast(ad::matmul(fused, ad::transpose(params.dense_W)),
                                  params.dense_b);
    return {z, beta, ys};
}

}  // namespace hugat::han

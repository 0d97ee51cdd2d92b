#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hugat/ad.hpp"
#include "hugat/hug.hpp"
#include "hugat/metapath.hpp"

namespace hugat::han {

struct HanConfig {
    int feature_dim = 250;
    int head_dim = 13;   // per-head output width; concat width = heads * head_dim
    int heads = 10;
    int semantic_dim = 128;
    int out_dim = 32;
    double leaky_slope = 0.2;

    int hidden() const { return head_dim * heads; }
};

// All trainable tensors. Creation order is fixed so a seed fully determines
// the initial values.
struct HanParameters {
    HanConfig config;
    std::vector<std::string> metapath_names;
    std::map<NodeType, ad::Var> proj;                    // head_dim x feature_dim
    std::vector<std::vector<ad::Var>> node_attn;         // [metapath][head], 2*head_dim x 1
    ad::Var sem_W;                                       // semantic_dim x hidden
    ad::Var sem_b;                                       // 1 x semantic_dim
    ad::Var sem_q;                                       // semantic_dim x 1
    ad::Var dense_W;                                     // out_dim x hidden
    ad::Var dense_b;                                     // 1 x out_dim

    std::vector<ad::Var> all() const;
    std::vector<std::pair<std::string, ad::Var>> named() const;
};

HanParameters init_parameters(const HanConfig& config,
                              const std::vector<std::string>& metapath_names,
                              std::uint64_t seed);

// Immutable per-instance inputs: region features and one dense neighbor mask
// per meta-path.
struct HanContext {
    Matrix region_features;      // N x m
    std::vector<Matrix> masks;   // P of N x N in {0,1}
    // same structure as masks, as sorted index lists consumed by the fused
    // attention kernel
    std::vector<std::shared_ptr<const ad::NeighborLists>> neighbors;
};

HanContext make_context(const HeterogeneousUrbanGraph& g,
                        const std::vector<MetaPathAdjacency>& adjacencies);

struct ForwardResult {
    ad::Var embeddings;          // N x out_dim
    ad::Var beta;                // 1 x P semantic attention weights
    std::vector<ad::Var> metapath_embeddings;  // P of N x hidden
};

// Type-specific projection applied to every node's feature vector.
std::map<NodeType, Matrix> project_features(const HeterogeneousUrbanGraph& g,
                                            const HanParameters& params);

// Node-level attention weights for one meta-path and head; rows sum to 1
// over the masked neighbor set.
ad::Var node_level_attention(const ad::Var& projected, const Matrix& mask,
                             const ad::Var& attn_vec, double leaky_slope);

// Multi-head aggregation over the neighbor sets, heads concatenated.
ad::Var metapath_aggregate(const ad::Var& projected, const std::vector<ad::Var>& alphas);

// Semantic attention: per-meta-path importance and the fused embedding.
std::pair<ad::Var, ad::Var> semantic_attention(const std::vector<ad::Var>& ys,
                                               const HanParameters& params);

ForwardResult forward(const HanContext& ctx, const HanParameters& params);

}  // namespace hugat::han

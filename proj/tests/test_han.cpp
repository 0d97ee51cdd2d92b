#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hugat/han.hpp"

using namespace hugat;
using namespace hugat::han;
using ad::Var;

namespace {

HanConfig small_config() {
    HanConfig c;
    c.feature_dim = 6;
    c.head_dim = 4;
    c.heads = 2;
    c.semantic_dim = 8;
    c.out_dim = 3;
    return c;
}

Var random_var(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Var t = ad::param(rows, cols);
    for (double& x : t->val) x = unif(rng);
    return t;
}

HeterogeneousUrbanGraph feature_only_graph(int regions, int feature_dim,
                                           std::mt19937_64& rng) {
    HeterogeneousUrbanGraph g;
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < regions; ++i) g.nodes[NodeType::Region].push_back("r" + std::to_string(i));
    Matrix f(regions, feature_dim);
    for (double& x : f.data()) x = unif(rng);
    g.features[NodeType::Region] = std::move(f);
    return g;
}

}  // namespace

TEST_CASE("projection with the identity matrix is the identity") {
    std::mt19937_64 rng(3);
    HanConfig cfg = small_config();
    cfg.head_dim = cfg.feature_dim;  // square projection
    auto g = feature_only_graph(4, cfg.feature_dim, rng);
    auto params = init_parameters(cfg, {"RR"}, 0);
    std::fill(params.proj[NodeType::Region]->val.begin(),
              params.proj[NodeType::Region]->val.end(), 0.0);
    for (int d = 0; d < cfg.feature_dim; ++d)
        params.proj[NodeType::Region]->val[d * cfg.feature_dim + d] = 1.0;
    auto projected = project_features(g, params);
    const auto& in = g.features.at(NodeType::Region).data();
    const auto& out = projected.at(NodeType::Region).data();
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == doctest::Approx(in[i]));
}

TEST_CASE("projection of zero features is zero") {
    std::mt19937_64 rng(5);
    HanConfig cfg = small_config();
    auto g = feature_only_graph(3, cfg.feature_dim, rng);
    std::fill(g.features[NodeType::Region].data().begin(),
              g.features[NodeType::Region].data().end(), 0.0);
    auto params = init_parameters(cfg, {"RR"}, 1);
    auto projected = project_features(g, params);
    for (double v : projected.at(NodeType::Region).data()) CHECK(v == 0.0);
}

TEST_CASE("projection matches a manual matrix product") {
    std::mt19937_64 rng(7);
    HanConfig cfg = small_config();
    auto g = feature_only_graph(5, cfg.feature_dim, rng);
    auto params = init_parameters(cfg, {"RR"}, 2);
    auto projected = project_features(g, params).at(NodeType::Region);
    const auto& f = g.features.at(NodeType::Region);
    const auto& w = params.proj.at(NodeType::Region);  // head_dim x feature_dim
    for (int i = 0; i < 5; ++i)
        for (int k = 0; k < cfg.head_dim; ++k) {
            double acc = 0;
            for (int d = 0; d < cfg.feature_dim; ++d)
                acc += f(i, d) * w->val[k * cfg.feature_dim + d];
            CHECK(projected(i, k) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("two identical neighbors get attention 0.5 each") {
    std::mt19937_64 rng(9);
    Var h = ad::param(2, 3);
    h->val = {0.4, -0.2, 0.9, 0.4, -0.2, 0.9};  // identical rows
    Var a = random_var(6, 1, rng);
    Matrix mask(2, 2, 1.0);
    Var alpha = node_level_attention(h, mask, a, 0.2);
    for (double v : alpha->val) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("a single-neighbor row gets weight 1") {
    std::mt19937_64 rng(11);
    Var h = random_var(3, 3, rng);
    Var a = random_var(6, 1, rng);
    Matrix mask(3, 3, 0.0);
    mask(0, 0) = 1.0;
    mask(1, 0) = mask(1, 2) = 1.0;
    mask(2, 2) = 1.0;
    Var alpha = node_level_attention(h, mask, a, 0.2);
    CHECK(alpha->val[0] == doctest::Approx(1.0));
    CHECK(alpha->val[8] == doctest::Approx(1.0));
    CHECK(alpha->val[1] == 0.0);  // masked entries carry no weight
}

TEST_CASE("attention rows sum to one over the neighbor set") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 5;
        Var h = random_var(n, 4, rng);
        Var a = random_var(8, 1, rng);
        Matrix mask(n, n, 0.0);
        std::uniform_int_distribution<int> coin(0, 1);
        for (std::size_t i = 0; i < n; ++i) {
            mask(i, i) = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && coin(rng)) mask(i, j) = 1.0;
        }
        Var alpha = node_level_attention(h, mask, a, 0.2);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) {
                s += alpha->val[i * n + j];
                if (mask(i, j) == 0.0) CHECK(alpha->val[i * n + j] == 0.0);
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("empty neighbor rows are rejected") {
    std::mt19937_64 rng(15);
    Var h = random_var(2, 3, rng);
    Var a = random_var(6, 1, rng);
    Matrix mask(2, 2, 0.0);
    mask(0, 0) = 1.0;
    CHECK_THROWS(node_level_attention(h, mask, a, 0.2));
}

TEST_CASE("single-head aggregation is elu of the attention average") {
    std::mt19937_64 rng(17);
    Var h = random_var(3, 4, rng);
    Var alpha = ad::constant(3, 3, 1.0 / 3.0);  // uniform attention
    Var y = metapath_aggregate(h, {alpha});
    REQUIRE(y->cols == 4);
    for (int k = 0; k < 4; ++k) {
        double mean = (h->val[k] + h->val[4 + k] + h->val[8 + k]) / 3.0;
        double expected = mean >= 0 ? mean : std::expm1(mean);
        CHECK(y->val[k] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("two heads concatenate side by side") {
    std::mt19937_64 rng(19);
    Var h = random_var(3, 4, rng);
    Var a1 = ad::constant(3, 3, 1.0 / 3.0);
    Matrix eye(3, 3, 0.0);
    for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
    Var a2 = ad::constant(eye);
    Var y = metapath_aggregate(h, {a1, a2});
    REQUIRE(y->cols == 8);
    Var y1 = metapath_aggregate(h, {a1});
    Var y2 = metapath_aggregate(h, {a2});
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 4; ++k) {
            CHECK(y->val[i * 8 + k] == y1->val[i * 4 + k]);
            CHECK(y->val[i * 8 + 4 + k] == y2->val[i * 4 + k]);
        }
}

TEST_CASE("identical meta-path embeddings get uniform semantic weights") {
    std::mt19937_64 rng(21);
    HanConfig cfg = small_config();
    auto params = init_parameters(cfg, {"a", "b", "c"}, 4);
    Var y = random_var(5, cfg.hidden(), rng);
    auto [beta, fused] = semantic_attention({y, y, y}, params);
    REQUIRE(beta->cols == 3);
    double total = 0;
    for (double b : beta->val) {
        CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        total += b;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < y->val.size(); ++i)
        CHECK(fused->val[i] == doctest::Approx(y->val[i]).epsilon(1e-12));
}

TEST_CASE("semantic weights always sum to one") {
    std::mt19937_64 rng(23);
    HanConfig cfg = small_config();
    auto params = init_parameters(cfg, {"a", "b"}, 5);
    for (int trial = 0; trial < 20; ++trial) {
        auto [beta, fused] =
            semantic_attention({random_var(4, cfg.hidden(), rng), random_var(4, cfg.hidden(), rng)},
                               params);
        CHECK(beta->val[0] + beta->val[1] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(beta->val[0] >= 0.0);
    }
}

TEST_CASE("forward works on a single-region context") {
    std::mt19937_64 rng(25);
    HanConfig cfg = small_config();
    HanContext ctx;
    ctx.region_features = Matrix(1, cfg.feature_dim, 0.3);
    ctx.masks = {Matrix(1, 1, 1.0), Matrix(1, 1, 1.0)};
    auto params = init_parameters(cfg, {"m0", "m1"}, 6);
    auto result = forward(ctx, params);
    CHECK(result.embeddings->rows == 1);
    CHECK(result.embeddings->cols == static_cast<std::size_t>(cfg.out_dim));
    CHECK(result.beta->val[0] + result.beta->val[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward is equivariant to region permutation") {
    std::mt19937_64 rng(27);
    HanConfig cfg = small_config();
    const int n = 5;
    Matrix features(n, cfg.feature_dim);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (double& x : features.data()) x = unif(rng);
    Matrix mask(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
        mask(i, i) = 1.0;
        mask(i, (i + 1) % n) = 1.0;
        mask((i + 1) % n, i) = 1.0;
    }

    std::vector<int> perm = {3, 0, 4, 1, 2};
    Matrix pf(n, cfg.feature_dim);
    Matrix pm(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < cfg.feature_dim; ++d) pf(i, d) = features(perm[i], d);
        for (int j = 0; j < n; ++j) pm(i, j) = mask(perm[i], perm[j]);
    }

    auto params = init_parameters(cfg, {"m0"}, 7);
    auto base = forward({features, {mask}}, params);
    auto permuted = forward({pf, {pm}}, params);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < cfg.out_dim; ++d)
            CHECK(permuted.embeddings->val[i * cfg.out_dim + d] ==
                  doctest::Approx(base.embeddings->val[perm[i] * cfg.out_dim + d])
                      .epsilon(1e-10));
}

TEST_CASE("parameter initialization is seed-deterministic with stable names") {
    HanConfig cfg = small_config();
    auto p1 = init_parameters(cfg, {"RR", "RCR"}, 42);
    auto p2 = init_parameters(cfg, {"RR", "RCR"}, 42);
    auto n1 = p1.named(), n2 = p2.named();
    REQUIRE(n1.size() == n2.size());
    for (std::size_t i = 0; i < n1.size(); ++i) {
        CHECK(n1[i].first == n2[i].first);
        CHECK(n1[i].second->val == n2[i].second->val);
    }
    auto p3 = init_parameters(cfg, {"RR", "RCR"}, 43);
    CHECK(p1.sem_W->val != p3.sem_W->val);
}

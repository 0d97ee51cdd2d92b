// Microbenchmarks for the hot paths: dense matmul in the autodiff engine,
// meta-path composition, a full model forward pass, and one training epoch.

#include <benchmark/benchmark.h>

#include <random>

#include "hugat/ad.hpp"
#include "hugat/han.hpp"
#include "hugat/metapath.hpp"
#include "hugat/optim.hpp"
#include "hugat/synth.hpp"
#include "hugat/train.hpp"

namespace {

using namespace hugat;

ad::Var random_var(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    ad::Var t = ad::param(rows, cols);
    for (double& x : t->val) x = unif(rng);
    return t;
}

void bench_matmul(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    auto a = random_var(n, n, rng);
    auto b = random_var(n, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b));
    state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(bench_matmul)->Arg(64)->Arg(128)->Arg(256);

struct CityFixture {
    HeterogeneousUrbanGraph graph;
    std::vector<MetaPathAdjacency> adjacencies;
    han::HanContext ctx;
    RegionTargets targets;
    han::HanConfig model;
    han::HanParameters params;

    explicit CityFixture(int regions) {
        synth::SyntheticCitySpec spec;
        spec.regions = regions;
        spec.checkin_events = 50 * regions;
        spec.trip_events = 100 * regions;
        spec.seed = 1;
        auto city = synth::generate_synthetic_city(spec);

        HugConfig hug_cfg;
        hug_cfg.feature_dim = 64;
        hug_cfg.seed = 1;
        graph = build_hug(city.inputs, hug_cfg);
        adjacencies = all_builtin_adjacencies(graph);
        ctx = han::make_context(graph, adjacencies);

        targets.od.F = od_counts(city.inputs);
        targets.trips = trip_conditionals(targets.od);
        targets.s_chk = hellinger_matrix(category_distribution(checkin_category_counts(city.inputs)));
        targets.s_land = hellinger_matrix(category_distribution(
            landuse_area_counts(city.landuse, graph.region_count())));

        model.feature_dim = 64;
        model.head_dim = 8;
        model.heads = 4;
        model.semantic_dim = 32;
        model.out_dim = 16;
        std::vector<std::string> names;
        for (const auto& adj : adjacencies) names.push_back(adj.metapath.name);
        params = han::init_parameters(model, names, 2);
    }
};

void bench_compose_adjacency(benchmark::State& state) {
    CityFixture fx(static_cast<int>(state.range(0)));
    const auto& mp = builtin_metapaths()[2];  // trip-origin path, densest
    for (auto _ : state) benchmark::DoNotOptimize(compose_adjacency(fx.graph, mp));
}
BENCHMARK(bench_compose_adjacency)->Arg(100)->Arg(300);

void bench_forward(benchmark::State& state) {
    CityFixture fx(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(han::forward(fx.ctx, fx.params));
}
BENCHMARK(bench_forward)->Arg(100)->Arg(300);

void bench_train_epoch(benchmark::State& state) {
    CityFixture fx(static_cast<int>(state.range(0)));
    ad::Adam adam(fx.params.all(), 1e-3);
    for (auto _ : state) {
        adam.zero_grad();
        auto fwd = han::forward(fx.ctx, fx.params);
        auto losses = train::total_loss(fwd.embeddings, fx.targets, {});
        ad::backward(losses.total);
        adam.step();
    }
}
BENCHMARK(bench_train_epoch)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

// Serial reference vs OpenMP-parallel kernels.
#include "vpe/pipeline.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <numbers>

using namespace vpe;

namespace {

const EmbeddingAtlas& sphere_atlas()
{
    static const EmbeddingAtlas atlas = build_embedding(PlanarDomain({Shape::disk({0, 0}, std::sqrt(3.96))}),
                                                        ModelManifold::round_sphere(1.0));
    return atlas;
}

kernels::Exec exec_of(const benchmark::State& s) { return s.range(0) ? kernels::Exec::parallel : kernels::Exec::serial; }

void BM_Verify(benchmark::State& state)
{
    const EmbeddingAtlas& atlas = sphere_atlas();
    VerifyOptions o;
    o.samples = 2000;
    o.exec = exec_of(state);
    o.keep_samples = false;
    for (auto _ : state) benchmark::DoNotOptimize(verify(atlas, o).max_residual);
    state.SetItemsProcessed(state.iterations() * static_cast<long>(o.samples));
}

void BM_EstimateDeficit(benchmark::State& state)
{
    auto image = [](const Vec2& y) { return y.norm() < 0.9; };
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_deficit(image, 1.0, 1000000, 1, exec_of(state)).deficit);
    state.SetItemsProcessed(state.iterations() * 1000000);
}

// The marginal table build has no serial switch; compare one thread with all.
void BM_MarginalBuild(benchmark::State& state)
{
    const int threads = state.range(0) ? omp_get_num_procs() : 1;
    const int saved = omp_get_max_threads();
    omp_set_num_threads(threads);
    auto f = [](const Vec2& x) { return std::exp(-0.5 * x.dot(x)) * (1.2 + std::sin(x.x * x.y)); };
    for (auto _ : state) {
        const DensityField d(f, Axis::real_line(1.0), Axis::real_line(1.0));
        benchmark::DoNotOptimize(d.mass().value());
    }
    omp_set_num_threads(saved);
    state.counters["threads"] = threads;
}

} // namespace

BENCHMARK(BM_Verify)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateDeficit)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MarginalBuild)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

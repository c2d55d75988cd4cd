#include "csisense/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using csisense::kernels::cplx;

std::vector<double> uniform(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v)
        x = u(rng);
    return v;
}

template <bool Parallel>
void bm_phasor_sums(benchmark::State& state) {
    const auto pos = uniform(128, 0.0, 511.0, 1);
    const auto f = uniform(static_cast<std::size_t>(state.range(0)), -4000.0, 4000.0, 2);
    std::vector<cplx> out(f.size());
    for (auto _ : state) {
        if constexpr (Parallel)
            csisense::kernels::parallel::phasor_sums(pos, 125e-6, f, out);
        else
            csisense::kernels::serial::phasor_sums(pos, 125e-6, f, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 128);
}

template <bool Parallel>
void bm_sidelobe_system(benchmark::State& state) {
    std::vector<double> half;
    for (int i = 0; i < 16; ++i)
        half.push_back(i);
    const auto back = uniform(48, 17.0, 254.0, 3);
    half.insert(half.end(), back.begin(), back.end());
    const auto nodes = uniform(static_cast<std::size_t>(state.range(0)), 20.0, 4000.0, 4);
    const auto w = uniform(nodes.size(), 0.0, 1.0, 5);
    for (auto _ : state) {
        auto sys = Parallel ? csisense::kernels::parallel::sidelobe_system(half, 16, 125e-6, nodes, w)
                            : csisense::kernels::serial::sidelobe_system(half, 16, 125e-6, nodes, w);
        benchmark::DoNotOptimize(sys.power);
    }
}

} // namespace

BENCHMARK(bm_phasor_sums<false>)->Arg(1024)->Arg(16384);
BENCHMARK(bm_phasor_sums<true>)->Arg(1024)->Arg(16384);
BENCHMARK(bm_sidelobe_system<false>)->Arg(1024)->Arg(4096);
BENCHMARK(bm_sidelobe_system<true>)->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();

// Serial reference kernels vs the OpenMP/im2col versions.
#include "dynenh/autonet.hpp"
#include "dynenh/kernels.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace dynenh;
namespace k = dynenh::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// ClassNet's second convolution: the most expensive layer per sample.
const k::ConvShape kConv{16, 31, 31, 32, 3, 1};

template <bool Parallel>
void BM_ConvForward(benchmark::State& st) {
    const auto in = random_values(kConv.input_count(), 1);
    const auto w = random_values(kConv.weight_count(), 2);
    const auto b = random_values(kConv.out_channels, 3);
    std::vector<double> out(kConv.output_count());
    for (auto _ : st) {
        if constexpr (Parallel) k::parallel::conv_forward(kConv, in, w, b, out);
        else k::reference::conv_forward(kConv, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& st) {
    const auto in = random_values(kConv.input_count(), 1);
    const auto w = random_values(kConv.weight_count(), 2);
    const auto go = random_values(kConv.output_count(), 3);
    std::vector<double> gi(kConv.input_count()), gw(kConv.weight_count()), gb(kConv.out_channels);
    for (auto _ : st) {
        if constexpr (Parallel) k::parallel::conv_backward(kConv, in, w, go, gi, gw, gb);
        else k::reference::conv_backward(kConv, in, w, go, gi, gw, gb);
        benchmark::DoNotOptimize(gw.data());
    }
}

template <bool Parallel>
void BM_PlaneCorrelate(benchmark::State& st) {
    const std::size_t n = static_cast<std::size_t>(st.range(0));
    const k::PlaneConv s{n, n, 6, 6, 2, 2};
    const auto in = random_values(n * n, 4);
    const auto ker = random_values(36, 5);
    std::vector<double> out(n * n);
    for (auto _ : st) {
        if constexpr (Parallel) k::parallel::plane_correlate(s, in, ker, out);
        else k::reference::plane_correlate(s, in, ker, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_Bilateral(benchmark::State& st) {
    const std::size_t n = static_cast<std::size_t>(st.range(0));
    auto in = random_values(n * n, 6);
    for (double& v : in) v = 0.5 + 0.5 * v;
    std::vector<double> out(n * n);
    for (auto _ : st) {
        if constexpr (Parallel) k::parallel::bilateral(n, n, in, 2.0, 0.1, out);
        else k::reference::bilateral(n, n, in, 2.0, 0.1, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference");
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel");
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference");
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel");
BENCHMARK(BM_PlaneCorrelate<false>)->Name("plane_correlate/reference")->Arg(96)->Arg(256);
BENCHMARK(BM_PlaneCorrelate<true>)->Name("plane_correlate/parallel")->Arg(96)->Arg(256);
BENCHMARK(BM_Bilateral<false>)->Name("bilateral/reference")->Arg(96);
BENCHMARK(BM_Bilateral<true>)->Name("bilateral/parallel")->Arg(96);

BENCHMARK_MAIN();

// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <vector>

#include "aee/kernels.hpp"
#include "aee/rng.hpp"

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    aee::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

struct ConvCase {
    aee::Conv1dGeometry g;
    std::vector<double> input, weights, bias, output, grad_out, grad_in, grad_w, grad_b;

    explicit ConvCase(std::size_t channels) {
        g = aee::conv1d_geometry(channels, 512, channels * 2, 9, 1, aee::Padding::same);
        input = random_values(channels * 512, 1);
        weights = random_values(g.out_channels * channels * 9, 2);
        bias = random_values(g.out_channels, 3);
        output.resize(g.out_channels * g.out_length);
        grad_out = random_values(output.size(), 4);
        grad_in.resize(input.size());
        grad_w.resize(weights.size());
        grad_b.resize(bias.size());
    }
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
    ConvCase c(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        if constexpr (Parallel) {
            aee::kernels::conv1d_forward(c.g, c.input, c.weights, c.bias, c.output);
        } else {
            aee::kernels::serial::conv1d_forward(c.g, c.input, c.weights, c.bias, c.output);
        }
        benchmark::DoNotOptimize(c.output.data());
    }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
    ConvCase c(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        if constexpr (Parallel) {
            aee::kernels::conv1d_backward(c.g, c.input, c.weights, c.grad_out, c.grad_in, c.grad_w, c.grad_b);
        } else {
            aee::kernels::serial::conv1d_backward(c.g, c.input, c.weights, c.grad_out, c.grad_in,
                                                  c.grad_w, c.grad_b);
        }
        benchmark::DoNotOptimize(c.grad_in.data());
    }
}

template <bool Parallel>
void BM_DenseForward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto input = random_values(n, 1);
    const auto weights = random_values(n * n, 2);
    const auto bias = random_values(n, 3);
    std::vector<double> out(n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            aee::kernels::dense_forward(n, n, input, weights, bias, out);
        } else {
            aee::kernels::serial::dense_forward(n, n, input, weights, bias, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_RadiusCounts(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto pts = random_values(n * 3, 5);
    for (auto _ : state) {
        auto counts = Parallel ? aee::kernels::radius_counts(pts, 3, 0.2)
                               : aee::kernels::serial::radius_counts(pts, 3, 0.2);
        benchmark::DoNotOptimize(counts.data());
    }
}

template <bool Parallel>
void BM_KthNeighbor(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto pts = random_values(n * 3, 6);
    for (auto _ : state) {
        auto d = Parallel ? aee::kernels::kth_neighbor_distances(pts, 3, 5)
                          : aee::kernels::serial::kth_neighbor_distances(pts, 3, 5);
        benchmark::DoNotOptimize(d.data());
    }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Arg(8)->Arg(32)->Name("conv_forward/serial");
BENCHMARK(BM_ConvForward<true>)->Arg(8)->Arg(32)->Name("conv_forward/openmp");
BENCHMARK(BM_ConvBackward<false>)->Arg(8)->Arg(32)->Name("conv_backward/serial");
BENCHMARK(BM_ConvBackward<true>)->Arg(8)->Arg(32)->Name("conv_backward/openmp");
BENCHMARK(BM_DenseForward<false>)->Arg(256)->Arg(1024)->Name("dense_forward/serial");
BENCHMARK(BM_DenseForward<true>)->Arg(256)->Arg(1024)->Name("dense_forward/openmp");
BENCHMARK(BM_RadiusCounts<false>)->Arg(1000)->Arg(5000)->Name("radius_counts/serial");
BENCHMARK(BM_RadiusCounts<true>)->Arg(1000)->Arg(5000)->Name("radius_counts/openmp");
BENCHMARK(BM_KthNeighbor<false>)->Arg(1000)->Arg(5000)->Name("kth_neighbor/serial");
BENCHMARK(BM_KthNeighbor<true>)->Arg(1000)->Arg(5000)->Name("kth_neighbor/openmp");

BENCHMARK_MAIN();

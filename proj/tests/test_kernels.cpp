#include <doctest.h>

#include <omp.h>

#include "aee/kernels.hpp"
#include "aee/rng.hpp"

using namespace aee;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// The parallel kernels must agree bitwise with the serial references for
// any thread count.
struct ThreadCount {
    explicit ThreadCount(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
    ~ThreadCount() { omp_set_num_threads(saved); }
    int saved;
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("conv1d geometry") {
    const auto same = conv1d_geometry(1, 10, 1, 4, 1, Padding::same);
    CHECK(same.out_length == 10);
    CHECK(same.pad_total == 3);
    CHECK(same.pad_left == 1);
    const auto strided = conv1d_geometry(1, 10, 1, 3, 3, Padding::same);
    CHECK(strided.out_length == 4);
    const auto valid = conv1d_geometry(1, 10, 1, 4, 2, Padding::valid);
    CHECK(valid.out_length == 4);
}

TEST_CASE("parallel conv and dense match the serial reference bitwise") {
    Rng rng(31);
    for (int threads : {1, 3, 8}) {
        ThreadCount guard(threads);
        for (int trial = 0; trial < 20; ++trial) {
            const auto g = conv1d_geometry(1 + rng.below(4), 20 + rng.below(60), 1 + rng.below(6),
                                           1 + rng.below(9), 1 + rng.below(3),
                                           trial % 2 ? Padding::same : Padding::valid);
            const auto x = random_vec(g.in_channels * g.in_length, rng);
            const auto w = random_vec(g.out_channels * g.in_channels * g.kernel, rng);
            const auto b = random_vec(g.out_channels, rng);
            const auto go = random_vec(g.out_channels * g.out_length, rng);

            std::vector<double> y1(g.out_channels * g.out_length), y2(y1.size());
            kernels::conv1d_forward(g, x, w, b, y1);
            kernels::serial::conv1d_forward(g, x, w, b, y2);
            CHECK(y1 == y2);

            std::vector<double> gi1(x.size()), gi2(x.size()), gw1(w.size()), gw2(w.size()),
                gb1(b.size()), gb2(b.size());
            kernels::conv1d_backward(g, x, w, go, gi1, gw1, gb1);
            kernels::serial::conv1d_backward(g, x, w, go, gi2, gw2, gb2);
            CHECK(gi1 == gi2);
            CHECK(gw1 == gw2);
            CHECK(gb1 == gb2);

            const std::size_t in = 5 + rng.below(40), out = 1 + rng.below(10);
            const auto dx = random_vec(in, rng);
            const auto dw = random_vec(in * out, rng);
            const auto db = random_vec(out, rng);
            std::vector<double> d1(out), d2(out);
            kernels::dense_forward(in, out, dx, dw, db, d1);
            kernels::serial::dense_forward(in, out, dx, dw, db, d2);
            CHECK(d1 == d2);
        }
    }
}

TEST_CASE("neighbor kernels match the serial reference") {
    Rng rng(32);
    for (int threads : {1, 4}) {
        ThreadCount guard(threads);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 50 + rng.below(150);
            const auto pts = random_vec(3 * n, rng);
            const double eps = rng.uniform(0.05, 0.6);
            CHECK(kernels::radius_neighbors(pts, 3, eps) == kernels::serial::radius_neighbors(pts, 3, eps));
            CHECK(kernels::radius_counts(pts, 3, eps) == kernels::serial::radius_counts(pts, 3, eps));
            CHECK(kernels::kth_neighbor_distances(pts, 3, 4) == kernels::serial::kth_neighbor_distances(pts, 3, 4));
        }
    }
}

}  // TEST_SUITE

#include "helpers.hpp"

#include "dynenh/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace dynenh;
namespace k = dynenh::kernels;

namespace {

std::vector<double> rand_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

k::ConvShape random_shape(Rng& rng) {
    k::ConvShape s;
    s.in_channels = 1 + rng.below(4);
    s.kernel = 1 + rng.below(5);
    s.stride = 1 + rng.below(2);
    s.in_height = s.kernel + rng.below(10);
    s.in_width = s.kernel + rng.below(10);
    s.out_channels = 1 + rng.below(5);
    return s;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("conv_forward on a hand-worked example") {
    // 1x3x3 input, one 2x2 kernel, stride 1
    const k::ConvShape s{1, 3, 3, 1, 2, 1};
    const std::vector<double> in = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<double> w = {1, 0, 0, -1}, b = {0.5};
    std::vector<double> out(4);
    k::reference::conv_forward(s, in, w, b, out);
    CHECK(out == std::vector<double>{-3.5, -3.5, -3.5, -3.5});
    k::parallel::conv_forward(s, in, w, b, out);
    CHECK(out == std::vector<double>{-3.5, -3.5, -3.5, -3.5});
}

TEST_CASE("parallel convolution agrees with the reference") {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const k::ConvShape s = random_shape(rng);
        const auto in = rand_vec(s.input_count(), rng);
        const auto w = rand_vec(s.weight_count(), rng);
        const auto b = rand_vec(s.out_channels, rng);
        std::vector<double> o1(s.output_count()), o2(s.output_count());
        k::reference::conv_forward(s, in, w, b, o1);
        k::parallel::conv_forward(s, in, w, b, o2);
        CHECK(max_diff(o1, o2) < 1e-10);

        const auto go = rand_vec(s.output_count(), rng);
        // gradients accumulate: start both from the same non-zero state
        std::vector<double> gi1(s.input_count(), 7.0), gi2(s.input_count(), -3.0);
        auto gw1 = rand_vec(s.weight_count(), rng);
        auto gw2 = gw1;
        std::vector<double> gb1(s.out_channels, 0.25), gb2(s.out_channels, 0.25);
        k::reference::conv_backward(s, in, w, go, gi1, gw1, gb1);
        k::parallel::conv_backward(s, in, w, go, gi2, gw2, gb2);
        CHECK(max_diff(gi1, gi2) < 1e-10);
        CHECK(max_diff(gw1, gw2) < 1e-10);
        CHECK(max_diff(gb1, gb2) < 1e-10);
    }
}

TEST_CASE("parallel plane correlation and bilateral agree with the reference") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t h = 1 + rng.below(20), w = 1 + rng.below(20);
        const std::size_t kh = 1 + rng.below(7), kw = 1 + rng.below(7);
        const k::PlaneConv s{h, w, kh, kw, rng.below(kh), rng.below(kw)};
        const auto in = rand_vec(h * w, rng);
        const auto ker = rand_vec(kh * kw, rng);
        std::vector<double> o1(h * w), o2(h * w);
        k::reference::plane_correlate(s, in, ker, o1);
        k::parallel::plane_correlate(s, in, ker, o2);
        CHECK(max_diff(o1, o2) < 1e-10);

        k::reference::bilateral(h, w, in, 1.5, 0.3, o1);
        k::parallel::bilateral(h, w, in, 1.5, 0.3, o2);
        CHECK(max_diff(o1, o2) < 1e-10);
    }
}

TEST_CASE("results do not depend on the thread count") {
    Rng rng(9);
    const k::ConvShape s{3, 17, 15, 6, 3, 1};
    const auto in = rand_vec(s.input_count(), rng);
    const auto w = rand_vec(s.weight_count(), rng);
    const auto go = rand_vec(s.output_count(), rng);
    const int saved = k::thread_count();
    std::vector<std::vector<double>> grads;
    for (int threads : {1, 3}) {
        k::set_thread_count(threads);
        std::vector<double> gi(s.input_count()), gw(s.weight_count()), gb(s.out_channels);
        k::parallel::conv_backward(s, in, w, go, gi, gw, gb);
        gi.insert(gi.end(), gw.begin(), gw.end());
        grads.push_back(gi);
    }
    k::set_thread_count(saved);
    CHECK(grads[0] == grads[1]);
}

}

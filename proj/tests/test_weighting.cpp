#include "helpers.hpp"
#include "oracles.hpp"

#include "dynenh/weighting.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace dynenh;

using oracle::weights_from_mse;

TEST_SUITE("weighting") {

TEST_CASE("five-stream fixture") {
    const std::vector<double> mse = {2, 1, 4, 8, 5};
    const auto out = compute_weights_from_mse(mse);
    // worked by hand: [9, 11, 5, 3, 3] / 31
    const std::vector<double> hand = {9.0 / 31, 11.0 / 31, 5.0 / 31, 3.0 / 31, 3.0 / 31};
    const auto orc = weights_from_mse(mse);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(out.weights.w[k] == doctest::Approx(hand[k]).epsilon(1e-12));
        CHECK(out.weights.w[k] == doctest::Approx(orc[k]).epsilon(1e-12));
    }
    CHECK(out.weights.w_rgb == 1.0);
    CHECK(out.note == WeightingNote::None);
}

TEST_CASE("two streams end up equal under the procedure") {
    const auto out = compute_weights_from_mse(std::vector<double>{1, 3});
    CHECK(out.weights.w[0] == doctest::Approx(0.5));
    CHECK(out.weights.w[1] == doctest::Approx(0.5));
}

TEST_CASE("random inputs: positive, normalised, order-reversing") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 3 + rng.below(6);
        std::vector<double> mse(k);
        for (double& v : mse) v = rng.uniform(1e-4, 0.2);
        const auto w = compute_weights_from_mse(mse).weights.w;
        const auto orc = weights_from_mse(mse);
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t a = 0; a < k; ++a) {
            CHECK(w[a] > 0.0);
            CHECK(w[a] == doctest::Approx(orc[a]).epsilon(1e-10));
        }
        // the repaired stream lands exactly on the second-worst one, so the
        // ordering holds for every pair
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                if (mse[a] < mse[b])
                    CHECK(w[a] >= w[b]);
    }
}

TEST_CASE("all-equal input falls back to equal weights") {
    const auto out = compute_weights_from_mse(std::vector<double>{0.3, 0.3, 0.3});
    CHECK(out.note == WeightingNote::AllEqualFallback);
    for (double v : out.weights.w) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("tied worst streams are all repaired") {
    const auto out = compute_weights_from_mse(std::vector<double>{1, 4, 4, 2});
    CHECK(out.note == WeightingNote::MultipleMinima);
    for (double v : out.weights.w) CHECK(v > 0.0);
}

TEST_CASE("invalid input") {
    CHECK_THROWS_AS(compute_weights_from_mse(std::vector<double>{1}), std::invalid_argument);
    CHECK_THROWS_AS(compute_weights_from_mse(std::vector<double>{1, -1}), std::invalid_argument);
    CHECK_THROWS_AS(compute_weights_from_mse(std::vector<double>{1, NAN}), std::invalid_argument);
}

TEST_CASE("fusion adds the RGB stream at weight one") {
    const std::vector<Prediction> streams = {{{0.8, 0.2}}, {{0.4, 0.6}}, {{0.0, 1.0}}};
    const StreamWeights w{{0.75, 0.25}, 1.0};
    const Prediction f = fused_predict(streams, w);
    CHECK(f.probs[0] == doctest::Approx((0.6 + 0.1) / 2));
    CHECK(f.probs[1] == doctest::Approx((0.15 + 0.15 + 1.0) / 2));
    CHECK_THROWS_AS(fused_predict(std::span(streams).first(2), w), std::invalid_argument);
}

}

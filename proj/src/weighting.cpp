#include "dynenh/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dynenh {

StreamWeights equal_weights(std::size_t k) {
    if (k == 0) throw std::invalid_argument("equal_weights: need at least one stream");
    return {std::vector<double>(k, 1.0 / static_cast<double>(k)), 1.0};
}

WeightingOutcome compute_weights_from_mse(std::span<const double> mse) {
    if (mse.size() < 2) throw std::invalid_argument("compute_weights_from_mse: need K >= 2");
    for (double m : mse)
        if (!std::isfinite(m) || m < 0.0)
            throw std::invalid_argument("compute_weights_from_mse: MSE must be finite and >= 0");

    const auto [lo, hi] = std::minmax_element(mse.begin(), mse.end());
    if (*lo == *hi) return {equal_weights(mse.size()), WeightingNote::AllEqualFallback};

    const double total = std::accumulate(mse.begin(), mse.end(), 0.0);
    std::vector<double> w(mse.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = mse[k] / total;

    const double wmax = *std::max_element(w.begin(), w.end());
    const double wmin = *std::min_element(w.begin(), w.end());
    for (double& v : w) v = (v - wmax) / (wmin - wmax);

    // The largest-MSE stream(s) now sit at exactly zero. The second minimum is
    // the smallest strictly positive entry, which exists because not all
    // inputs are equal.
    double second = 1.0;
    std::size_t zeros = 0;
    for (double v : w) {
        if (v == 0.0)
            ++zeros;
        else
            second = std::min(second, v);
    }
    for (double& v : w) v = (v == 0.0) ? v - second / 2 + second : v - second / 2;

    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= sum;
    return {{std::move(w), 1.0},
            zeros > 1 ? WeightingNote::MultipleMinima : WeightingNote::None};
}

Prediction fused_predict(std::span<const Prediction> streams, const StreamWeights& weights) {
    if (streams.size() != weights.stream_count())
        throw std::invalid_argument("fused_predict: " + std::to_string(streams.size()) +
                                    " streams for " + std::to_string(weights.stream_count()) +
                                    " weights");
    const std::size_t c = streams.front().probs.size();
    Prediction out{std::vector<double>(c, 0.0)};
    for (std::size_t k = 0; k < streams.size(); ++k) {
        if (streams[k].probs.size() != c)
            throw std::invalid_argument("fused_predict: streams disagree on class count");
        for (std::size_t q = 0; q < c; ++q) out.probs[q] += weights.at(k) * streams[k].probs[q];
    }
    const double total = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
    for (double& p : out.probs) p /= total;
    return out;
}

}  // namespace dynenh

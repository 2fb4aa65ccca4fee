#pragma once

#include "dynenh/classify.hpp"

#include <span>
#include <string>
#include <vector>

namespace dynenh {

/// Weights of the K enhancement streams plus the fixed RGB weight.
struct StreamWeights {
    std::vector<double> w;  // sums to 1, all > 0
    double w_rgb = 1.0;

    std::size_t stream_count() const { return w.size() + 1; }
    /// Weight of stream k in 0..K, where k == K is the RGB stream.
    double at(std::size_t k) const { return k < w.size() ? w[k] : w_rgb; }
};

StreamWeights equal_weights(std::size_t k);

enum class WeightingNote {
    None,
    AllEqualFallback,  // every MSE equal: equal weights returned
    MultipleMinima,    // several streams tied at the largest MSE: each repaired
};

struct WeightingOutcome {
    StreamWeights weights;
    WeightingNote note = WeightingNote::None;
};

/// Converts per-stream reconstruction MSEs into fusion weights:
///   w = mse / sum(mse); w = (w - max) / (min - max);
///   s2 = second smallest w; w -= s2/2; w[argmin] += s2; w /= sum(w).
/// Smaller MSE gets a larger weight. Throws std::invalid_argument for K < 2
/// or negative/non-finite input.
WeightingOutcome compute_weights_from_mse(std::span<const double> mse);

/// normalize(sum_k W_k p_k + p_rgb); the last stream is RGB.
Prediction fused_predict(std::span<const Prediction> streams, const StreamWeights& weights);

}  // namespace dynenh

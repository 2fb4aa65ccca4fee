#pragma once

#include "dynenh/autonet.hpp"
#include "dynenh/imgcore.hpp"

#include <span>
#include <vector>

namespace dynenh {

struct ClassNetConfig {
    std::size_t input_extent = 64;
    std::size_t class_count = 2;

    std::vector<LayerSpec> layers() const;
};

/// Network input: RGB planes shifted by -0.5, shape (3, extent, extent).
Tensor class_net_input(const ImageRGB& img);

class ClassNet {
public:
    explicit ClassNet(ClassNetConfig cfg);

    const ClassNetConfig& config() const { return cfg_; }
    const Network& network() const { return net_; }
    Network& network() { return net_; }

    /// Throws DimensionError unless img is input_extent square.
    ForwardResult forward(const NetParams& params, const ImageRGB& img) const;

    /// Per-block multipliers: `head` for the last two fc layers, `body` elsewhere.
    std::vector<double> fine_tune_multipliers(double body, double head) const;

private:
    ClassNetConfig cfg_;
    Network net_;
};

struct Prediction {
    std::vector<double> probs;

    /// Lowest class index wins ties.
    std::size_t argmax() const;
};

Prediction predict(const Tensor& logits);

/// Throws std::invalid_argument on empty or mismatched input.
double accuracy(std::span<const Prediction> preds, std::span<const std::size_t> labels);

struct MapResult {
    double map = 0.0;
    std::vector<double> per_class_ap;         // NaN for excluded classes
    std::vector<std::size_t> excluded_classes;  // classes with no positives
};

/// scores[c][i] is the score of sample i for class c; label_sets[i] lists the
/// positive classes of sample i. Ranking ties break by sample index.
MapResult mean_average_precision(const std::vector<std::vector<double>>& scores,
                                 const std::vector<std::vector<std::size_t>>& label_sets);

}  // namespace dynenh

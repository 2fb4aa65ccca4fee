#pragma once

#include "dynenh/autonet.hpp"
#include "dynenh/imgcore.hpp"

#include <cstdint>

namespace dynenh {

/// One s x s enhancement kernel. Odd and even sizes both anchor at
/// floor((s-1)/2); the identity tap sits at the anchor.
struct DynamicFilter {
    Plane taps;

    std::size_t size() const { return taps.height(); }
    Anchor anchor() const { return {(size() - 1) / 2, (size() - 1) / 2}; }

    static DynamicFilter identity(std::size_t size);
    friend bool operator==(const DynamicFilter&, const DynamicFilter&) = default;
};

enum class EnhanceNetPreset { Desk, PaperScale };

struct EnhanceNetConfig {
    std::size_t input_extent = 64;
    std::size_t filter_size = 6;  // 5, 6 or 7
    EnhanceNetPreset preset = EnhanceNetPreset::Desk;

    std::size_t head_size() const { return filter_size * filter_size; }
    std::vector<LayerSpec> layers() const;
    void validate() const;
};

/// Network input: centre square of y resized to the configured extent,
/// shifted by -0.5.
Tensor enhance_net_input(const Plane& y, std::size_t extent);

Plane apply_filter(const Plane& y, const DynamicFilter& f);

/// d loss / d taps for Y' = apply_filter(y, f), given d loss / d Y'.
Plane filter_tap_gradient(const Plane& y, const Plane& grad_output, std::size_t filter_size);

struct FilterPass {
    DynamicFilter filter;
    Tape tape;
};

struct EnhancementLoss {
    double mse = 0.0;
    Plane output;  // Y'
    Gradients grads;
};

/// The filter-generating network and its head-to-kernel mapping.
class EnhanceNet {
public:
    explicit EnhanceNet(EnhanceNetConfig cfg);

    const EnhanceNetConfig& config() const { return cfg_; }
    const Network& network() const { return net_; }
    Network& network() { return net_; }

    /// Random body, zero head weights, head bias = flattened identity kernel.
    NetParams init_identity(std::uint64_t seed) const;

    FilterPass generate_filter(const NetParams& params, const Plane& y) const;

    /// Adds d loss / d params into `grads` given d loss / d taps.
    void backward_taps(const NetParams& params, const FilterPass& pass, const Plane& tap_grad,
                       Gradients& grads) const;

    /// mse(apply_filter(y, generate_filter(y)), t) and its parameter gradient.
    EnhancementLoss loss_and_grads(const NetParams& params, const Plane& y, const Plane& t) const;

private:
    EnhanceNetConfig cfg_;
    Network net_;
};

}  // namespace dynenh

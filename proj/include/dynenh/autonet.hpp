#pragma once

// Small reverse-mode network engine: valid-padding convolutions, fully
// connected layers, ReLU, max pooling and flatten, operating on one sample
// at a time. Batching is done by callers, which reduce per-sample gradients
// in sample order.

#include "dynenh/imgcore.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dynenh {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& s);

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Same data, new extents with equal product.
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

enum class LayerKind { Conv, FC, ReLU, MaxPool, Flatten };

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    std::size_t width = 0;   // output channels (conv) or output units (fc)
    std::size_t kernel = 0;  // conv kernel extent or pooling window
    std::size_t stride = 1;

    static LayerSpec conv(std::size_t out_channels, std::size_t kernel, std::size_t stride = 1) {
        return {LayerKind::Conv, out_channels, kernel, stride};
    }
    static LayerSpec fc(std::size_t units) { return {LayerKind::FC, units, 0, 1}; }
    static LayerSpec relu() { return {LayerKind::ReLU, 0, 0, 1}; }
    static LayerSpec maxpool(std::size_t window = 2) {
        return {LayerKind::MaxPool, 0, window, window};
    }
    static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0, 1}; }

    bool has_params() const { return kind == LayerKind::Conv || kind == LayerKind::FC; }
    std::string describe() const;
    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ParamBlock {
    std::size_t layer = 0;
    std::size_t weight_offset = 0, weight_count = 0;
    std::size_t bias_offset = 0, bias_count = 0;
    friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

struct ParamLayout {
    std::vector<ParamBlock> blocks;
    std::size_t total_count = 0;
    friend bool operator==(const ParamLayout&, const ParamLayout&) = default;
};

/// Flat parameter storage addressed through a block layout.
class ParamStore {
public:
    ParamStore() = default;
    explicit ParamStore(ParamLayout layout)
        : layout_(std::move(layout)), values_(layout_.total_count, 0.0) {}

    const ParamLayout& layout() const { return layout_; }
    std::size_t total_count() const { return layout_.total_count; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    std::span<double> weights(std::size_t block) {
        const auto& b = layout_.blocks.at(block);
        return {values_.data() + b.weight_offset, b.weight_count};
    }
    std::span<const double> weights(std::size_t block) const {
        const auto& b = layout_.blocks.at(block);
        return {values_.data() + b.weight_offset, b.weight_count};
    }
    std::span<double> bias(std::size_t block) {
        const auto& b = layout_.blocks.at(block);
        return {values_.data() + b.bias_offset, b.bias_count};
    }
    std::span<const double> bias(std::size_t block) const {
        const auto& b = layout_.blocks.at(block);
        return {values_.data() + b.bias_offset, b.bias_count};
    }

    void fill(double v) { std::fill(values_.begin(), values_.end(), v); }
    /// this += scale * other; layouts must match.
    void add_scaled(const ParamStore& other, double scale);

    friend bool operator==(const ParamStore&, const ParamStore&) = default;

private:
    ParamLayout layout_;
    std::vector<double> values_;
};

struct NetParams : ParamStore {
    using ParamStore::ParamStore;
};
struct Gradients : ParamStore {
    using ParamStore::ParamStore;
};

/// Activation record of one forward pass.
struct Tape {
    std::vector<Tensor> activations;  // [i] is the input to layer i; back() is the output
    std::vector<std::vector<std::uint32_t>> pool_argmax;
};

struct ForwardResult {
    Tensor output;
    Tape tape;
};

struct BackwardResult {
    Gradients grads;
    Tensor input_grad;
};

enum class KernelBackend { Parallel, Reference };

class Network {
public:
    /// Validates the stack; throws DimensionError on incompatible layers.
    Network(Shape input_shape, std::vector<LayerSpec> layers);

    const Shape& input_shape() const { return shapes_.front(); }
    const Shape& output_shape() const { return shapes_.back(); }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<Shape>& shapes() const { return shapes_; }
    const ParamLayout& layout() const { return layout_; }
    std::size_t total_count() const { return layout_.total_count; }
    /// Index into layout().blocks for layer i, or npos when the layer has no parameters.
    std::size_t block_of_layer(std::size_t layer) const { return block_index_.at(layer); }

    /// Uniform in +-sqrt(6/(fan_in+fan_out)), zero biases.
    NetParams init_params(std::uint64_t seed) const;
    NetParams zero_params() const { return NetParams(layout_); }
    Gradients zero_gradients() const { return Gradients(layout_); }

    ForwardResult forward(const NetParams& params, const Tensor& x) const;
    BackwardResult backward(const NetParams& params, const Tape& tape,
                            const Tensor& grad_out) const;
    /// Adds this sample's parameter gradients into `grads`; returns d/d input.
    Tensor backward_into(const NetParams& params, const Tape& tape, const Tensor& grad_out,
                         Gradients& grads) const;

    void set_backend(KernelBackend b) { backend_ = b; }
    KernelBackend backend() const { return backend_; }

    /// Text manifest of the layer stack, used in checkpoints.
    std::string manifest() const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    void check_params(const ParamStore& p, const char* what) const;

    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;
    ParamLayout layout_;
    std::vector<std::size_t> block_index_;
    KernelBackend backend_ = KernelBackend::Parallel;
};

struct SgdConfig {
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    double momentum = 0.9;
    double lr_decay_factor = 0.1;
    std::size_t lr_decay_every = 15000;

    /// lr0 * factor^floor(step / decay_every)
    double learning_rate_at(std::size_t step) const;
    void validate() const;
};

struct SgdState {
    std::vector<double> velocity;
};

/// v <- momentum*v + g + decay*p; p <- p - lr(step)*mult*v.
/// `block_lr_multipliers` is empty or has one entry per parameter block.
void sgd_step(NetParams& params, const Gradients& grads, const SgdConfig& cfg,
              std::size_t step, SgdState& state,
              std::span<const double> block_lr_multipliers = {});

struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

std::vector<double> softmax(std::span<const double> logits);
/// Max-subtracted softmax followed by -log P[label]; grad = P - onehot.
LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label);

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const NetParams& params);
/// Throws IoError when the file's manifest does not match `net`.
NetParams load_checkpoint(const std::filesystem::path& path, const Network& net);

/// Maps [0,1) doubles from a 64-bit seed; portable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next();
    double uniform();                        // [0,1)
    double uniform(double lo, double hi);    // [lo,hi)
    std::size_t below(std::size_t n);        // [0,n)
    double normal();

private:
    std::uint64_t state_;
};

}  // namespace dynenh

#include "dynenh/autonet.hpp"

#include "dynenh/image_io.hpp"
#include "dynenh/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace dynenh {

std::string shape_string(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
}

namespace {
std::size_t product(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != product(shape_))
        throw DimensionError("Tensor: data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
}

Tensor Tensor::reshaped(Shape shape) const {
    if (product(shape) != data_.size())
        throw DimensionError("Tensor::reshaped: " + shape_string(shape_) + " -> " +
                             shape_string(shape));
    return Tensor(std::move(shape), data_);
}

std::string LayerSpec::describe() const {
    switch (kind) {
        case LayerKind::Conv:
            return "conv " + std::to_string(width) + " " + std::to_string(kernel) + " " +
                   std::to_string(stride);
        case LayerKind::FC: return "fc " + std::to_string(width);
        case LayerKind::ReLU: return "relu";
        case LayerKind::MaxPool: return "maxpool " + std::to_string(kernel);
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

void ParamStore::add_scaled(const ParamStore& other, double scale) {
    if (!(layout_ == other.layout_)) throw DimensionError("ParamStore::add_scaled: layout mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
}

Network::Network(Shape input_shape, std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    shapes_.push_back(std::move(input_shape));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        const Shape& in = shapes_.back();
        const std::string where = "layer " + std::to_string(i) + " (" + l.describe() + ") input " +
                                  shape_string(in);
        Shape out;
        std::size_t block = npos;
        switch (l.kind) {
            case LayerKind::Conv: {
                if (in.size() != 3) throw DimensionError(where + ": conv needs (C,H,W)");
                if (l.kernel == 0 || l.stride == 0 || l.width == 0 || l.kernel > in[1] ||
                    l.kernel > in[2])
                    throw DimensionError(where + ": invalid conv geometry");
                out = {l.width, (in[1] - l.kernel) / l.stride + 1, (in[2] - l.kernel) / l.stride + 1};
                ParamBlock b{i, layout_.total_count, l.width * in[0] * l.kernel * l.kernel, 0, l.width};
                b.bias_offset = b.weight_offset + b.weight_count;
                layout_.total_count = b.bias_offset + b.bias_count;
                block = layout_.blocks.size();
                layout_.blocks.push_back(b);
                break;
            }
            case LayerKind::FC: {
                if (in.size() != 1) throw DimensionError(where + ": fc needs a flat input");
                if (l.width == 0) throw DimensionError(where + ": fc width must be >= 1");
                out = {l.width};
                ParamBlock b{i, layout_.total_count, l.width * in[0], 0, l.width};
                b.bias_offset = b.weight_offset + b.weight_count;
                layout_.total_count = b.bias_offset + b.bias_count;
                block = layout_.blocks.size();
                layout_.blocks.push_back(b);
                break;
            }
            case LayerKind::ReLU: out = in; break;
            case LayerKind::MaxPool:
                if (in.size() != 3) throw DimensionError(where + ": maxpool needs (C,H,W)");
                if (l.kernel == 0 || in[1] < l.kernel || in[2] < l.kernel)
                    throw DimensionError(where + ": invalid pooling window");
                out = {in[0], in[1] / l.kernel, in[2] / l.kernel};
                break;
            case LayerKind::Flatten: out = {product(in)}; break;
        }
        block_index_.push_back(block);
        shapes_.push_back(std::move(out));
    }
}

NetParams Network::init_params(std::uint64_t seed) const {
    NetParams p(layout_);
    Rng rng(seed);
    for (std::size_t bi = 0; bi < layout_.blocks.size(); ++bi) {
        const ParamBlock& b = layout_.blocks[bi];
        const LayerSpec& l = layers_[b.layer];
        const Shape& in = shapes_[b.layer];
        double fan_in = 0, fan_out = 0;
        if (l.kind == LayerKind::Conv) {
            const double area = static_cast<double>(l.kernel * l.kernel);
            fan_in = static_cast<double>(in[0]) * area;
            fan_out = static_cast<double>(l.width) * area;
        } else {
            fan_in = static_cast<double>(in[0]);
            fan_out = static_cast<double>(l.width);
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : p.weights(bi)) w = rng.uniform(-limit, limit);
    }
    return p;
}

void Network::check_params(const ParamStore& p, const char* what) const {
    if (!(p.layout() == layout_))
        throw DimensionError(std::string(what) + ": parameter layout does not match network");
}

ForwardResult Network::forward(const NetParams& params, const Tensor& x) const {
    check_params(params, "forward");
    if (x.shape() != input_shape())
        throw DimensionError("forward: input " + shape_string(x.shape()) + " expected " +
                             shape_string(input_shape()));
    ForwardResult res;
    res.tape.activations.reserve(layers_.size() + 1);
    res.tape.pool_argmax.resize(layers_.size());
    res.tape.activations.push_back(x);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        const Tensor& in = res.tape.activations.back();
        const Shape& is = shapes_[i];
        Tensor out(shapes_[i + 1]);
        switch (l.kind) {
            case LayerKind::Conv: {
                const std::size_t b = block_index_[i];
                const kernels::ConvShape cs{is[0], is[1], is[2], l.width, l.kernel, l.stride};
                if (backend_ == KernelBackend::Reference)
                    kernels::reference::conv_forward(cs, in.values(), params.weights(b),
                                                     params.bias(b), out.values());
                else
                    kernels::parallel::conv_forward(cs, in.values(), params.weights(b),
                                                    params.bias(b), out.values());
                break;
            }
            case LayerKind::FC: {
                const std::size_t b = block_index_[i];
                const auto w = params.weights(b);
                const auto bias = params.bias(b);
                const std::size_t n_in = is[0];
                for (std::size_t o = 0; o < l.width; ++o) {
                    double acc = 0.0;
                    const double* row = w.data() + o * n_in;
#pragma omp simd reduction(+ : acc)
                    for (std::size_t k = 0; k < n_in; ++k) acc += row[k] * in[k];
                    acc += bias[o];
                    out[o] = acc;
                }
                break;
            }
            case LayerKind::ReLU:
                for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
                break;
            case LayerKind::MaxPool: {
                const std::size_t c = is[0], h = is[1], w = is[2], p = l.kernel;
                const std::size_t oh = h / p, ow = w / p;
                auto& arg = res.tape.pool_argmax[i];
                arg.assign(out.size(), 0);
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t y = 0; y < oh; ++y)
                        for (std::size_t x = 0; x < ow; ++x) {
                            std::size_t best = (ch * h + y * p) * w + x * p;
                            for (std::size_t dy = 0; dy < p; ++dy)
                                for (std::size_t dx = 0; dx < p; ++dx) {
                                    const std::size_t idx = (ch * h + y * p + dy) * w + x * p + dx;
                                    if (in[idx] > in[best]) best = idx;
                                }
                            const std::size_t o = (ch * oh + y) * ow + x;
                            out[o] = in[best];
                            arg[o] = static_cast<std::uint32_t>(best);
                        }
                break;
            }
            case LayerKind::Flatten: out = in.reshaped(shapes_[i + 1]); break;
        }
        res.tape.activations.push_back(std::move(out));
    }
    res.output = res.tape.activations.back();
    return res;
}

BackwardResult Network::backward(const NetParams& params, const Tape& tape,
                                 const Tensor& grad_out) const {
    BackwardResult r{zero_gradients(), {}};
    r.input_grad = backward_into(params, tape, grad_out, r.grads);
    return r;
}

Tensor Network::backward_into(const NetParams& params, const Tape& tape, const Tensor& grad_out,
                              Gradients& grads) const {
    check_params(params, "backward");
    check_params(grads, "backward");
    if (tape.activations.size() != layers_.size() + 1)
        throw DimensionError("backward: stale tape (layer count differs)");
    for (std::size_t i = 0; i < shapes_.size(); ++i)
        if (tape.activations[i].shape() != shapes_[i])
            throw DimensionError("backward: stale tape at activation " + std::to_string(i));
    if (grad_out.shape() != output_shape())
        throw DimensionError("backward: grad_out " + shape_string(grad_out.shape()) +
                             " expected " + shape_string(output_shape()));

    Tensor g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const LayerSpec& l = layers_[i];
        const Tensor& in = tape.activations[i];
        const Shape& is = shapes_[i];
        Tensor gin(is);
        switch (l.kind) {
            case LayerKind::Conv: {
                const std::size_t b = block_index_[i];
                const kernels::ConvShape cs{is[0], is[1], is[2], l.width, l.kernel, l.stride};
                if (backend_ == KernelBackend::Reference)
                    kernels::reference::conv_backward(cs, in.values(), params.weights(b),
                                                      g.values(), gin.values(), grads.weights(b),
                                                      grads.bias(b));
                else
                    kernels::parallel::conv_backward(cs, in.values(), params.weights(b),
                                                     g.values(), gin.values(), grads.weights(b),
                                                     grads.bias(b));
                break;
            }
            case LayerKind::FC: {
                const std::size_t b = block_index_[i];
                const auto w = params.weights(b);
                auto gw = grads.weights(b);
                auto gb = grads.bias(b);
                const std::size_t n_in = is[0];
                for (std::size_t o = 0; o < l.width; ++o) {
                    const double go = g[o];
                    gb[o] += go;
                    if (go == 0.0) continue;
                    const double* row = w.data() + o * n_in;
                    double* grow = gw.data() + o * n_in;
                    for (std::size_t k = 0; k < n_in; ++k) {
                        grow[k] += go * in[k];
                        gin[k] += go * row[k];
                    }
                }
                break;
            }
            case LayerKind::ReLU:
                for (std::size_t k = 0; k < in.size(); ++k) gin[k] = in[k] > 0.0 ? g[k] : 0.0;
                break;
            case LayerKind::MaxPool: {
                const auto& arg = tape.pool_argmax.at(i);
                if (arg.size() != g.size()) throw DimensionError("backward: stale pooling record");
                for (std::size_t o = 0; o < g.size(); ++o) gin[arg[o]] += g[o];
                break;
            }
            case LayerKind::Flatten: gin = g.reshaped(is); break;
        }
        g = std::move(gin);
    }
    return g;
}

std::string Network::manifest() const {
    std::ostringstream os;
    os << "input " << shape_string(input_shape()) << '\n';
    for (const LayerSpec& l : layers_) os << l.describe() << '\n';
    return os.str();
}

double SgdConfig::learning_rate_at(std::size_t step) const {
    const std::size_t drops = lr_decay_every ? step / lr_decay_every : 0;
    return learning_rate * std::pow(lr_decay_factor, static_cast<double>(drops));
}

void SgdConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("sgd: learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("sgd: momentum must lie in [0,1)");
}

void sgd_step(NetParams& params, const Gradients& grads, const SgdConfig& cfg, std::size_t step,
              SgdState& state, std::span<const double> block_lr_multipliers) {
    if (!(params.layout() == grads.layout()))
        throw DimensionError("sgd_step: gradient layout does not match parameters");
    const auto& blocks = params.layout().blocks;
    if (!block_lr_multipliers.empty() && block_lr_multipliers.size() != blocks.size())
        throw DimensionError("sgd_step: one learning-rate multiplier per block required");
    if (state.velocity.size() != params.total_count())
        state.velocity.assign(params.total_count(), 0.0);
    const double lr = cfg.learning_rate_at(step);
    auto p = params.values();
    auto g = grads.values();
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const double rate = lr * (block_lr_multipliers.empty() ? 1.0 : block_lr_multipliers[bi]);
        const ParamBlock& b = blocks[bi];
        const std::size_t begin = b.weight_offset, end = b.bias_offset + b.bias_count;
        for (std::size_t k = begin; k < end; ++k) {
            double& v = state.velocity[k];
            v = cfg.momentum * v + g[k] + cfg.weight_decay * p[k];
            p[k] -= rate * v;
        }
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) total += p[k] = std::exp(logits[k] - mx);
    for (double& v : p) v /= total;
    return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.size() < 2) throw DimensionError("softmax_cross_entropy: need >= 2 classes");
    if (label >= logits.size())
        throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) + " classes");
    const auto v = logits.values();
    const double mx = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double a : v) total += std::exp(a - mx);
    const double log_z = mx + std::log(total);
    LossResult r{log_z - v[label], Tensor(logits.shape())};
    for (std::size_t k = 0; k < v.size(); ++k) r.grad[k] = std::exp(v[k] - log_z);
    r.grad[label] -= 1.0;
    return r;
}

namespace {
constexpr const char* kCheckpointMagic = "DYNENH-CKPT 1";
}

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const NetParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    const std::string manifest = net.manifest();
    out << kCheckpointMagic << '\n'
        << "manifest " << manifest.size() << '\n'
        << manifest << "blocks " << params.layout().blocks.size() << '\n';
    for (const ParamBlock& b : params.layout().blocks)
        out << b.layer << ' ' << b.weight_count << ' ' << b.bias_count << '\n';
    out << "values " << params.total_count() << '\n';
    for (double v : params.values()) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw IoError("cannot write checkpoint " + path.string());
}

NetParams load_checkpoint(const std::filesystem::path& path, const Network& net) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != kCheckpointMagic) throw IoError(path.string() + ": not a checkpoint");
    std::string word;
    std::size_t n = 0;
    in >> word >> n;
    in.get();
    std::string manifest(n, '\0');
    in.read(manifest.data(), static_cast<std::streamsize>(n));
    if (word != "manifest" || manifest != net.manifest())
        throw IoError(path.string() + ": layer manifest does not match network");
    in >> word >> n;
    if (word != "blocks" || n != net.layout().blocks.size())
        throw IoError(path.string() + ": block count mismatch");
    for (const ParamBlock& b : net.layout().blocks) {
        std::size_t layer = 0, wc = 0, bc = 0;
        in >> layer >> wc >> bc;
        if (layer != b.layer || wc != b.weight_count || bc != b.bias_count)
            throw IoError(path.string() + ": block layout mismatch");
    }
    in >> word >> n;
    in.get();
    if (word != "values" || n != net.total_count())
        throw IoError(path.string() + ": parameter count mismatch");
    NetParams p = net.zero_params();
    for (double& v : p.values()) {
        std::uint64_t bits = 0;
        if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
            throw IoError(path.string() + ": truncated parameters");
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        v = std::bit_cast<double>(bits);
    }
    return p;
}

Rng::Rng(std::uint64_t seed) : state_(seed) {}

// splitmix64
std::uint64_t Rng::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::below(std::size_t n) { return n ? static_cast<std::size_t>(next() % n) : 0; }

double Rng::normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dynenh

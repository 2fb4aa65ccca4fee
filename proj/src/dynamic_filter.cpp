#include "dynenh/dynamic_filter.hpp"

#include <stdexcept>

namespace dynenh {

DynamicFilter DynamicFilter::identity(std::size_t size) {
    DynamicFilter f{Plane(size, size)};
    const Anchor a = f.anchor();
    f.taps(a.row, a.col) = 1.0;
    return f;
}

std::vector<LayerSpec> EnhanceNetConfig::layers() const {
    if (preset == EnhanceNetPreset::PaperScale)
        return {LayerSpec::conv(16, 5, 2), LayerSpec::relu(),   LayerSpec::conv(32, 5, 2),
                LayerSpec::relu(),         LayerSpec::maxpool(2), LayerSpec::flatten(),
                LayerSpec::fc(448),        LayerSpec::relu(),   LayerSpec::fc(head_size())};
    return {LayerSpec::conv(8, 5, 2), LayerSpec::relu(),     LayerSpec::conv(16, 5, 2),
            LayerSpec::relu(),        LayerSpec::maxpool(2), LayerSpec::flatten(),
            LayerSpec::fc(128),       LayerSpec::relu(),     LayerSpec::fc(head_size())};
}

void EnhanceNetConfig::validate() const {
    if (filter_size < 5 || filter_size > 7)
        throw std::invalid_argument("EnhanceNet: filter size must be 5, 6 or 7, got " +
                                    std::to_string(filter_size));
    if (input_extent < 32)
        throw std::invalid_argument("EnhanceNet: input extent must be >= 32");
}

Tensor enhance_net_input(const Plane& y, std::size_t extent) {
    Plane sq = (y.height() == extent && y.width() == extent) ? y : center_square(y, extent);
    std::vector<double> data(sq.values().begin(), sq.values().end());
    for (double& v : data) v -= 0.5;
    return Tensor({1, extent, extent}, std::move(data));
}

Plane apply_filter(const Plane& y, const DynamicFilter& f) {
    return convolve2d(y, f.taps, f.anchor());
}

Plane filter_tap_gradient(const Plane& y, const Plane& grad_output, std::size_t filter_size) {
    if (!y.same_shape(grad_output)) throw DimensionError("filter_tap_gradient: extents differ");
    const long a = static_cast<long>((filter_size - 1) / 2);
    const long h = static_cast<long>(y.height()), w = static_cast<long>(y.width());
    Plane g(filter_size, filter_size);
    for (std::size_t u = 0; u < filter_size; ++u)
        for (std::size_t v = 0; v < filter_size; ++v) {
            const long du = static_cast<long>(u) - a, dv = static_cast<long>(v) - a;
            double acc = 0.0;
            for (long i = 0; i < h; ++i)
                for (long j = 0; j < w; ++j) {
                    const double go = grad_output(i, j);
                    if (go != 0.0) acc += go * y.at_clamped(i + du, j + dv);
                }
            g(u, v) = acc;
        }
    return g;
}

EnhanceNet::EnhanceNet(EnhanceNetConfig cfg)
    : cfg_((cfg.validate(), cfg)),
      net_({1, cfg_.input_extent, cfg_.input_extent}, cfg_.layers()) {}

NetParams EnhanceNet::init_identity(std::uint64_t seed) const {
    NetParams p = net_.init_params(seed);
    const std::size_t head = net_.layout().blocks.size() - 1;
    for (double& w : p.weights(head)) w = 0.0;
    const DynamicFilter id = DynamicFilter::identity(cfg_.filter_size);
    std::copy(id.taps.values().begin(), id.taps.values().end(), p.bias(head).begin());
    return p;
}

FilterPass EnhanceNet::generate_filter(const NetParams& params, const Plane& y) const {
    ForwardResult fr = net_.forward(params, enhance_net_input(y, cfg_.input_extent));
    const std::size_t s = cfg_.filter_size;
    std::vector<double> taps(fr.output.values().begin(), fr.output.values().end());
    return {DynamicFilter{Plane(s, s, std::move(taps))}, std::move(fr.tape)};
}

void EnhanceNet::backward_taps(const NetParams& params, const FilterPass& pass,
                               const Plane& tap_grad, Gradients& grads) const {
    Tensor g(net_.output_shape(),
             std::vector<double>(tap_grad.values().begin(), tap_grad.values().end()));
    net_.backward_into(params, pass.tape, g, grads);
}

EnhancementLoss EnhanceNet::loss_and_grads(const NetParams& params, const Plane& y,
                                           const Plane& t) const {
    if (!y.same_shape(t)) throw DimensionError("enhancement loss: image and target extents differ");
    const FilterPass pass = generate_filter(params, y);
    EnhancementLoss res{0.0, apply_filter(y, pass.filter), net_.zero_gradients()};
    res.mse = mse(res.output, t);
    Plane dout(y.height(), y.width());
    const double scale = 2.0 / static_cast<double>(y.size());
    for (std::size_t k = 0; k < y.size(); ++k)
        dout.values()[k] = scale * (res.output.values()[k] - t.values()[k]);
    backward_taps(params, pass, filter_tap_gradient(y, dout, cfg_.filter_size), res.grads);
    return res;
}

}  // namespace dynenh

#include "dynenh/gradcheck.hpp"

#include "dynenh/autonet.hpp"
#include "dynenh/dynamic_filter.hpp"
#include "dynenh/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace dynenh {

double gradcheck_rel_error(double analytic, double numeric, double floor) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    const double diff = std::abs(analytic - numeric);
    if (scale < floor) return diff / floor;
    return diff / scale;
}

namespace {

// Fourth-order central stencil: truncation O(h^4) lets h stay large enough
// that rounding in O(1) losses does not swamp gradients of order 1e-7.
constexpr double kStep = 1e-4;

// Five-point central difference of `loss` in coordinate i of x.
double numeric_grad(std::span<double> x, std::size_t i, double h, const std::function<double()>& loss) {
    const double saved = x[i];
    auto at = [&](double offset) {
        x[i] = saved + offset;
        return loss();
    };
    const double g = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    x[i] = saved;
    return g;
}

struct CoordCheck {
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t kinked = 0;
};

// Compares `analytic` to finite differences over `coords` random entries of
// `x`, which `loss` reads. A coordinate whose two step sizes disagree has a
// ReLU/max/clamp kink inside the stencil; it is replaced by another draw.
CoordCheck check_coords(std::span<double> x, std::span<const double> analytic, const std::function<double()>& loss,
                        std::size_t coords, Rng& rng) {
    CoordCheck out;
    const bool exhaustive = x.size() <= coords;
    for (std::size_t c = 0; out.checked < std::min(coords, x.size()) && c < 10 * coords + x.size(); ++c) {
        const std::size_t i = exhaustive ? c % x.size() : rng.below(x.size());
        const double coarse = numeric_grad(x, i, kStep, loss);
        const double fine = numeric_grad(x, i, kStep / 4, loss);
        if (!exhaustive && gradcheck_rel_error(coarse, fine, 1e-8) > 1e-5) {
            ++out.kinked;
            continue;
        }
        out.worst = std::max(out.worst, gradcheck_rel_error(analytic[i], coarse));
        ++out.checked;
    }
    return out;
}

Tensor random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(s);
    for (double& v : t.values()) {
        // keep inputs away from ReLU kinks and pooling ties
        do v = rng.uniform(lo, hi);
        while (std::abs(v) < 0.02);
    }
    return t;
}

// Linear probe loss sum(out * probe) through a network: checks parameter and
// input gradients.
void merge(GradcheckRow& row, const CoordCheck& c) {
    row.checked += c.checked;
    row.kinked += c.kinked;
    row.max_rel_error = std::max(row.max_rel_error, c.worst);
}

GradcheckRow make_row(const std::string& name, const CoordCheck& c) {
    return {name, c.checked, c.kinked, c.worst};
}

GradcheckRow check_network(const std::string& name, const Network& net, std::size_t coords, Rng& rng) {
    NetParams p = net.init_params(rng.next());
    for (double& v : p.values()) v += rng.uniform(-0.05, 0.05);
    Tensor x = random_tensor(net.input_shape(), rng);
    const Tensor probe = random_tensor(net.output_shape(), rng);
    auto loss = [&] {
        const Tensor out = net.forward(p, x).output;
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
        return s;
    };
    const ForwardResult fr = net.forward(p, x);
    const BackwardResult br = net.backward(p, fr.tape, probe);
    GradcheckRow row{name};
    if (p.total_count() > 0) merge(row, check_coords(p.values(), br.grads.values(), loss, coords, rng));
    merge(row, check_coords(x.values(), br.input_grad.values(), loss, coords, rng));
    return row;
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, std::size_t coords) {
    Rng rng(seed);
    std::vector<GradcheckRow> rows;
    rows.push_back(check_network("conv", Network({3, 9, 9}, {LayerSpec::conv(4, 3)}), coords, rng));
    rows.push_back(check_network("conv_stride2", Network({2, 11, 11}, {LayerSpec::conv(3, 5, 2)}), coords, rng));
    rows.push_back(check_network("fc", Network({24}, {LayerSpec::fc(7)}), coords, rng));
    rows.push_back(check_network("relu", Network({4, 6, 6}, {LayerSpec::relu()}), coords, rng));
    rows.push_back(check_network("maxpool", Network({4, 8, 8}, {LayerSpec::maxpool(2)}), coords, rng));
    rows.push_back(check_network("flatten", Network({3, 6, 6}, {LayerSpec::flatten(), LayerSpec::fc(4)}), coords, rng));

    {
        Tensor logits = random_tensor({128}, rng, -3.0, 3.0);
        const std::size_t label = rng.below(128);
        const LossResult lr = softmax_cross_entropy(logits, label);
        auto loss = [&] { return softmax_cross_entropy(logits, label).loss; };
        rows.push_back(make_row("softmax_xent", check_coords(logits.values(), lr.grad.values(), loss, coords, rng)));
    }

    // Synthetic 40x40 luminance with structure, and a sharpened target.
    Plane y(40, 40);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 40; ++j)
            y(i, j) = 0.5 + 0.25 * std::sin(0.4 * i + 0.1 * j) + 0.1 * rng.uniform(-1.0, 1.0);
    const Plane t = unsharp(y, 1.0, 2.0);

    {
        EnhanceNet net(EnhanceNetConfig{64, 6});
        NetParams p = net.init_identity(rng.next());
        for (double& v : p.values()) v += rng.uniform(-0.01, 0.01);
        const EnhancementLoss el = net.loss_and_grads(p, y, t);
        auto loss = [&] { return mse(apply_filter(y, net.generate_filter(p, y).filter), t); };
        rows.push_back(make_row("filter_chain_mse", check_coords(p.values(), el.grads.values(), loss, coords, rng)));
    }

    {
        RunConfig cfg;
        cfg.input_extent = 64;
        Trainer trainer(cfg, 4);
        Plane y64 = resize_bilinear(y, 64, 64);
        ImageRGB img(64, 64);
        for (std::size_t k = 0; k < y64.size(); ++k) {
            const double v = std::clamp(y64.values()[k], 0.05, 0.95);
            img.r.values()[k] = v;
            img.g.values()[k] = std::clamp(0.8 * v + 0.1, 0.0, 1.0);
            img.b.values()[k] = std::clamp(1.0 - v, 0.05, 0.95);
        }
        const Plane t64 = unsharp(luminance(img), 1.0, 2.0);
        NetParams enh = trainer.init_enhance(EnhanceMethod::Imsharp);
        for (double& v : enh.values()) v += rng.uniform(-0.01, 0.01);
        const NetParams cls = trainer.init_classnet();
        Gradients g_enh = trainer.enhance_net().network().zero_gradients();
        Gradients g_cls = trainer.class_net().network().zero_gradients();
        trainer.a1_sample(enh, cls, img, t64, 1, &g_enh, &g_cls);
        auto loss = [&] { return trainer.a1_sample(enh, cls, img, t64, 1, nullptr, nullptr).total; };
        rows.push_back(make_row("classify_to_filter", check_coords(enh.values(), g_enh.values(), loss, coords, rng)));
        NetParams cls_mut = cls;
        auto loss_cls = [&] { return trainer.a1_sample(enh, cls_mut, img, t64, 1, nullptr, nullptr).total; };
        rows.push_back(make_row("classnet", check_coords(cls_mut.values(), g_cls.values(), loss_cls, coords, rng)));
    }
    return rows;
}

}  // namespace dynenh

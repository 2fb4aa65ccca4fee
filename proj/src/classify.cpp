#include "dynenh/classify.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dynenh {

std::vector<LayerSpec> ClassNetConfig::layers() const {
    return {LayerSpec::conv(16, 3), LayerSpec::relu(), LayerSpec::maxpool(2),
            LayerSpec::conv(32, 3), LayerSpec::relu(), LayerSpec::maxpool(2),
            LayerSpec::flatten(),   LayerSpec::fc(128), LayerSpec::relu(),
            LayerSpec::fc(class_count)};
}

Tensor class_net_input(const ImageRGB& img) {
    const std::size_t n = img.height() * img.width();
    std::vector<double> data(3 * n);
    for (int c = 0; c < 3; ++c)
        std::transform(img.channel(c).values().begin(), img.channel(c).values().end(),
                       data.begin() + static_cast<long>(c * n), [](double v) { return v - 0.5; });
    return Tensor({3, img.height(), img.width()}, std::move(data));
}

ClassNet::ClassNet(ClassNetConfig cfg)
    : cfg_(cfg), net_({3, cfg.input_extent, cfg.input_extent}, cfg.layers()) {
    if (cfg_.class_count < 2) throw std::invalid_argument("ClassNet: need at least 2 classes");
}

ForwardResult ClassNet::forward(const NetParams& params, const ImageRGB& img) const {
    if (img.height() != cfg_.input_extent || img.width() != cfg_.input_extent)
        throw DimensionError("ClassNet: image " + std::to_string(img.height()) + "x" +
                             std::to_string(img.width()) + " expected " +
                             std::to_string(cfg_.input_extent) + " square");
    return net_.forward(params, class_net_input(img));
}

std::vector<double> ClassNet::fine_tune_multipliers(double body, double head) const {
    const auto& blocks = net_.layout().blocks;
    std::vector<double> m(blocks.size(), body);
    std::size_t fc_seen = 0;
    for (std::size_t i = blocks.size(); i-- > 0 && fc_seen < 2;) {
        if (net_.layers()[blocks[i].layer].kind == LayerKind::FC) {
            m[i] = head;
            ++fc_seen;
        }
    }
    return m;
}

std::size_t Prediction::argmax() const {
    return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

Prediction predict(const Tensor& logits) { return {softmax(logits.values())}; }

double accuracy(std::span<const Prediction> preds, std::span<const std::size_t> labels) {
    if (preds.empty()) throw std::invalid_argument("accuracy: empty prediction list");
    if (preds.size() != labels.size())
        throw std::invalid_argument("accuracy: predictions and labels differ in length");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].argmax() == labels[i];
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

MapResult mean_average_precision(const std::vector<std::vector<double>>& scores,
                                 const std::vector<std::vector<std::size_t>>& label_sets) {
    MapResult res;
    const std::size_t n = label_sets.size();
    double total = 0.0;
    std::size_t evaluated = 0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (scores[c].size() != n)
            throw std::invalid_argument("mean_average_precision: score/label count mismatch");
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores[c][a] > scores[c][b];
        });
        std::size_t hits = 0;
        double sum_prec = 0.0;
        for (std::size_t rank = 0; rank < n; ++rank) {
            const auto& ls = label_sets[order[rank]];
            if (std::find(ls.begin(), ls.end(), c) != ls.end()) {
                ++hits;
                sum_prec += static_cast<double>(hits) / static_cast<double>(rank + 1);
            }
        }
        if (hits == 0) {
            std::cerr << "warning: class " << c << " has no positives; excluded from mAP\n";
            res.excluded_classes.push_back(c);
            res.per_class_ap.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double ap = sum_prec / static_cast<double>(hits);
        res.per_class_ap.push_back(ap);
        total += ap;
        ++evaluated;
    }
    if (evaluated == 0) throw std::invalid_argument("mean_average_precision: no class has positives");
    res.map = total / static_cast<double>(evaluated);
    return res;
}

}  // namespace dynenh

#include "dynenh/pipeline.hpp"

#include "dynenh/image_io.hpp"
#include "dynenh/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;

namespace dynenh {

std::string_view approach_name(Approach a) {
    switch (a) {
        case Approach::FC: return "fc";
        case Approach::A1: return "a1";
        case Approach::A2: return "a2";
        case Approach::A3: return "a3";
    }
    return "?";
}

Approach parse_approach(std::string_view s) {
    for (Approach a : {Approach::FC, Approach::A1, Approach::A2, Approach::A3})
        if (approach_name(a) == s) return a;
    throw std::invalid_argument("unknown approach '" + std::string(s) + "' (fc|a1|a2|a3)");
}

std::string_view weighting_name(Weighting w) { return w == Weighting::Equal ? "equal" : "mse"; }

Weighting parse_weighting(std::string_view s) {
    if (s == "equal") return Weighting::Equal;
    if (s == "mse") return Weighting::Mse;
    throw std::invalid_argument("unknown weighting '" + std::string(s) + "' (equal|mse)");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// RunConfig <-> key=value

namespace {

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyDef {
    const char* key;
    Getter get;
    Setter set;
};

#define DOUBLE_KEY(name, field)                                                              \
    KeyDef {                                                                                 \
        name, [](const RunConfig& c) { return format_number(c.field); },                     \
            [](RunConfig& c, const std::string& k, const std::string& v) {                   \
                c.field = parse_double(k, v);                                                \
            }                                                                                \
    }
#define COUNT_KEY(name, field)                                                               \
    KeyDef {                                                                                 \
        name, [](const RunConfig& c) { return std::to_string(c.field); },                    \
            [](RunConfig& c, const std::string& k, const std::string& v) {                   \
                c.field = parse_count(k, v);                                                 \
            }                                                                                \
    }

const std::vector<KeyDef>& key_defs() {
    static const std::vector<KeyDef> defs = {
        {"approach", [](const RunConfig& c) { return std::string(approach_name(c.approach)); },
         [](RunConfig& c, const std::string&, const std::string& v) { c.approach = parse_approach(v); }},
        {"method", [](const RunConfig& c) { return std::string(method_name(c.method)); },
         [](RunConfig& c, const std::string& k, const std::string& v) {
             auto m = parse_method(v);
             if (!m) throw std::invalid_argument("config key '" + k + "': unknown method '" + v + "'");
             c.method = *m;
         }},
        {"weighting", [](const RunConfig& c) { return std::string(weighting_name(c.weighting)); },
         [](RunConfig& c, const std::string&, const std::string& v) { c.weighting = parse_weighting(v); }},
        COUNT_KEY("filter_size", filter_size),
        COUNT_KEY("input_extent", input_extent),
        COUNT_KEY("pretrain_epochs", pretrain_epochs),
        COUNT_KEY("epochs", epochs),
        COUNT_KEY("bank_epochs", bank_epochs),
        COUNT_KEY("batch_size", batch_size),
        DOUBLE_KEY("class_lr", class_sgd.learning_rate),
        DOUBLE_KEY("class_weight_decay", class_sgd.weight_decay),
        DOUBLE_KEY("class_momentum", class_sgd.momentum),
        DOUBLE_KEY("class_lr_decay_factor", class_sgd.lr_decay_factor),
        COUNT_KEY("class_lr_decay_every", class_sgd.lr_decay_every),
        DOUBLE_KEY("enhance_lr", enhance_sgd.learning_rate),
        DOUBLE_KEY("enhance_weight_decay", enhance_sgd.weight_decay),
        DOUBLE_KEY("enhance_momentum", enhance_sgd.momentum),
        DOUBLE_KEY("enhance_lr_decay_factor", enhance_sgd.lr_decay_factor),
        COUNT_KEY("enhance_lr_decay_every", enhance_sgd.lr_decay_every),
        DOUBLE_KEY("body_lr_mult", body_lr_mult),
        DOUBLE_KEY("head_lr_mult", head_lr_mult),
        DOUBLE_KEY("mse_weight", mse_weight),
        {"mse_term", [](const RunConfig& c) { return std::string(c.mse_term ? "true" : "false"); },
         [](RunConfig& c, const std::string& k, const std::string& v) { c.mse_term = parse_bool(k, v); }},
        COUNT_KEY("seed", seed),
        COUNT_KEY("crop_extent", augment.crop_extent),
        {"flips", [](const RunConfig& c) { return std::string(c.augment.enable_flips ? "true" : "false"); },
         [](RunConfig& c, const std::string& k, const std::string& v) { c.augment.enable_flips = parse_bool(k, v); }},
        DOUBLE_KEY("jitter", augment.jitter_strength),
        DOUBLE_KEY("wls_lambda", enhance.wls_lambda),
        DOUBLE_KEY("wls_alpha", enhance.wls_alpha),
        DOUBLE_KEY("wls_eps", enhance.wls_eps),
        DOUBLE_KEY("detail_boost_c", enhance.detail_boost_c),
        DOUBLE_KEY("bf_sigma_spatial_frac", enhance.bf_sigma_spatial_frac),
        DOUBLE_KEY("bf_sigma_range_frac", enhance.bf_sigma_range_frac),
        DOUBLE_KEY("gf_radius_frac", enhance.gf_radius_frac),
        DOUBLE_KEY("gf_eps_frac", enhance.gf_eps_frac),
        DOUBLE_KEY("sharp_amount", enhance.sharp_amount),
        DOUBLE_KEY("sharp_radius", enhance.sharp_radius),
        {"data_dir", [](const RunConfig& c) { return c.data_dir.string(); },
         [](RunConfig& c, const std::string&, const std::string& v) { c.data_dir = v; }},
        {"cache_dir", [](const RunConfig& c) { return c.cache_dir.string(); },
         [](RunConfig& c, const std::string&, const std::string& v) { c.cache_dir = v; }},
        DOUBLE_KEY("split_train", split.train),
        DOUBLE_KEY("split_val", split.val),
        DOUBLE_KEY("split_test", split.test),
        COUNT_KEY("data_seed", data_seed),
    };
    return defs;
}

#undef DOUBLE_KEY
#undef COUNT_KEY

}  // namespace

KeyValues RunConfig::to_key_values() const {
    KeyValues kv;
    for (const KeyDef& d : key_defs()) kv.set(d.key, d.get(*this));
    return kv;
}

RunConfig RunConfig::from_key_values(const KeyValues& kv) {
    RunConfig c;
    for (const auto& [k, v] : kv.entries()) {
        const auto& defs = key_defs();
        const auto it = std::find_if(defs.begin(), defs.end(), [&](const KeyDef& d) { return k == d.key; });
        if (it == defs.end()) throw std::invalid_argument("unknown config key '" + k + "'");
        it->set(c, k, v);
    }
    c.validate();
    return c;
}

std::vector<std::pair<std::string, std::string>> config_key_help() {
    const RunConfig defaults;
    std::vector<std::pair<std::string, std::string>> out;
    for (const KeyDef& d : key_defs()) out.emplace_back(d.key, d.get(defaults));
    return out;
}

void RunConfig::validate() const {
    EnhanceNetConfig{input_extent, filter_size}.validate();
    class_sgd.validate();
    enhance_sgd.validate();
    if (!(mse_weight >= 0.0)) throw std::invalid_argument("mse_weight must be >= 0");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (augment.crop_extent != input_extent)
        throw std::invalid_argument("crop_extent must equal input_extent");
    if (augment.jitter_strength < 0.0 || augment.jitter_strength >= 1.0)
        throw std::invalid_argument("jitter must lie in [0,1)");
    if (split.train <= 0.0 || split.val < 0.0 || split.test < 0.0 ||
        split.train + split.val + split.test > 1.0 + 1e-9)
        throw std::invalid_argument("split ratios must be non-negative, train > 0, sum <= 1");
    const EnhanceParams& e = enhance;
    if (e.wls_lambda < 0 || e.wls_alpha <= 0 || e.wls_eps <= 0 || e.detail_boost_c < 0 ||
        e.bf_sigma_spatial_frac <= 0 || e.bf_sigma_range_frac <= 0 || e.gf_radius_frac <= 0 ||
        e.gf_eps_frac <= 0 || e.sharp_amount < 0 || e.sharp_radius <= 0)
        throw std::invalid_argument("enhancement parameters must be positive");
}

// ---------------------------------------------------------------------------
// Data

std::vector<LoadedSample> load_samples(const DatasetManifest& manifest, Split split,
                                       const fs::path& cache_dir,
                                       std::span<const EnhanceMethod> methods) {
    std::vector<LoadedSample> out;
    for (const Sample& s : manifest.split(split)) {
        LoadedSample ls;
        ls.path = s.path;
        ls.image = read_image(s.path);
        ls.label = s.label;
        ls.labels = s.all_labels();
        ls.targets.resize(kMethodCount);
        for (EnhanceMethod m : methods) {
            const fs::path tp = target_path(cache_dir, manifest, s, m);
            if (!fs::exists(tp)) throw MissingTargetError(s.path, tp);
            Plane t = read_plane(tp);
            if (t.height() != ls.image.height() || t.width() != ls.image.width())
                throw DimensionError("cached target " + tp.string() + " does not match its image");
            ls.targets[static_cast<std::size_t>(m)] = std::move(t);
        }
        out.push_back(std::move(ls));
    }
    return out;
}

namespace {
bool is_exact_identity(const DynamicFilter& f) { return f == DynamicFilter::identity(f.size()); }
}  // namespace

ImageRGB enhance_rgb(const ImageRGB& rgb, const DynamicFilter& f) {
    if (is_exact_identity(f)) return rgb;
    YCbCr ycc = rgb_to_ycbcr(rgb);
    ycc.y = apply_filter(ycc.y, f);
    return ycbcr_to_rgb(ycc);
}

Plane luma_gradient(const YCbCr& rebuilt, const Tensor& input_grad) {
    const std::size_t n = rebuilt.y.size();
    if (input_grad.size() != 3 * n) throw DimensionError("luma_gradient: gradient extent mismatch");
    constexpr double kGreenPerY = (1.0 - kLumaR - kLumaB) / kLumaG;
    Plane out(rebuilt.y.height(), rebuilt.y.width());
    auto inside = [](double v) { return v > 0.0 && v < 1.0; };
    for (std::size_t i = 0; i < n; ++i) {
        const double y = rebuilt.y.values()[i];
        const double r = y + rebuilt.cr.values()[i] / kCrScale;
        const double b = y + rebuilt.cb.values()[i] / kCbScale;
        const double g = (y - kLumaR * r - kLumaB * b) / kLumaG;
        double acc = 0.0;
        if (inside(r)) acc += input_grad[i];
        if (inside(g)) acc += kGreenPerY * input_grad[n + i];
        if (inside(b)) acc += input_grad[2 * n + i];
        out.values()[i] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trainer: per-sample primitives

Trainer::Trainer(RunConfig cfg, std::size_t class_count)
    : cfg_((cfg.validate(), std::move(cfg))),
      enhance_(EnhanceNetConfig{cfg_.input_extent, cfg_.filter_size}),
      class_(ClassNetConfig{cfg_.input_extent, class_count}) {}

NetParams Trainer::init_classnet() const { return class_.network().init_params(cfg_.seed * 31 + 1); }

NetParams Trainer::init_enhance(EnhanceMethod m) const {
    return enhance_.init_identity(cfg_.seed * 31 + 100 + static_cast<std::uint64_t>(m));
}

namespace {

// Runs ClassNet on one stream image and backpropagates `weight * dL`.
struct StreamOutcome {
    double loss;
    Prediction pred;
    Tensor input_grad;
};

StreamOutcome class_stream(const ClassNet& net, const NetParams& cls, const ImageRGB& img,
                           std::size_t label, double weight, Gradients* g_cls, bool need_input_grad) {
    ForwardResult fr = net.forward(cls, img);
    LossResult ce = softmax_cross_entropy(fr.output, label);
    StreamOutcome out{ce.loss, predict(fr.output), {}};
    if (g_cls || need_input_grad) {
        for (double& g : ce.grad.values()) g *= weight;
        if (g_cls) {
            out.input_grad = net.network().backward_into(cls, fr.tape, ce.grad, *g_cls);
        } else {
            Gradients scratch = net.network().zero_gradients();
            out.input_grad = net.network().backward_into(cls, fr.tape, ce.grad, scratch);
        }
    }
    return out;
}

void add_mse_gradient(Plane& dy, const Plane& out, const Plane& target, double weight) {
    const double scale = 2.0 * weight / static_cast<double>(out.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        dy.values()[k] += scale * (out.values()[k] - target.values()[k]);
}

}  // namespace

SampleLoss Trainer::rgb_sample(const NetParams& cls, const ImageRGB& img, std::size_t label,
                               Gradients* g_cls) const {
    StreamOutcome s = class_stream(class_, cls, img, label, 1.0, g_cls, false);
    SampleLoss r;
    r.cls = r.total = s.loss;
    r.stream_loss = {s.loss};
    r.prediction = std::move(s.pred);
    return r;
}

SampleLoss Trainer::a1_sample(const NetParams& enh, const NetParams& cls, const ImageRGB& img,
                              const Plane& target, std::size_t label, Gradients* g_enh,
                              Gradients* g_cls) const {
    const YCbCr ycc = rgb_to_ycbcr(img);
    const FilterPass pass = enhance_.generate_filter(enh, ycc.y);
    const YCbCr rebuilt{apply_filter(ycc.y, pass.filter), ycc.cb, ycc.cr};
    SampleLoss r;
    r.mse = mse(rebuilt.y, target);
    StreamOutcome s = class_stream(class_, cls, ycbcr_to_rgb(rebuilt), label, 1.0, g_cls, g_enh != nullptr);
    r.cls = s.loss;
    r.total = cfg_.mse_weight * r.mse + r.cls;
    r.stream_mse = {r.mse};
    r.stream_loss = {s.loss};
    r.prediction = std::move(s.pred);
    if (g_enh) {
        Plane dy = luma_gradient(rebuilt, s.input_grad);
        add_mse_gradient(dy, rebuilt.y, target, cfg_.mse_weight);
        enhance_.backward_taps(enh, pass, filter_tap_gradient(ycc.y, dy, cfg_.filter_size), *g_enh);
    }
    return r;
}

SampleLoss Trainer::stat_sample(const StaticFilterBank& bank, const StreamWeights& w,
                                const NetParams& cls, const ImageRGB& img, std::size_t label,
                                Gradients* g_cls) const {
    if (bank.filters.size() != w.stream_count())
        throw std::invalid_argument("stat_sample: bank has " + std::to_string(bank.filters.size()) +
                                    " filters for " + std::to_string(w.stream_count()) + " weights");
    SampleLoss r;
    std::vector<Prediction> preds;
    for (std::size_t k = 0; k < bank.filters.size(); ++k) {
        StreamOutcome s = class_stream(class_, cls, enhance_rgb(img, bank.filters[k]), label, w.at(k), g_cls, false);
        r.stream_loss.push_back(s.loss);
        r.cls += w.at(k) * s.loss;
        preds.push_back(std::move(s.pred));
    }
    r.total = r.cls;
    r.weights = w.w;
    r.prediction = fused_predict(preds, w);
    return r;
}

SampleLoss Trainer::dyn_sample(std::span<const NetParams> enh, const NetParams& cls, const ImageRGB& img,
                               std::span<const Plane> targets, std::size_t label,
                               std::span<Gradients> g_enh, Gradients* g_cls) const {
    const std::size_t k_count = enh.size();
    if (targets.size() != k_count) throw std::invalid_argument("dyn_sample: one target per stream required");
    if (!g_enh.empty() && g_enh.size() != k_count)
        throw std::invalid_argument("dyn_sample: one gradient store per stream required");
    const YCbCr ycc = rgb_to_ycbcr(img);
    std::vector<FilterPass> passes;
    std::vector<YCbCr> rebuilt;
    SampleLoss r;
    for (std::size_t k = 0; k < k_count; ++k) {
        passes.push_back(enhance_.generate_filter(enh[k], ycc.y));
        rebuilt.push_back({apply_filter(ycc.y, passes.back().filter), ycc.cb, ycc.cr});
        r.stream_mse.push_back(mse(rebuilt.back().y, targets[k]));
    }
    const StreamWeights w = cfg_.weighting == Weighting::Mse
                                ? compute_weights_from_mse(r.stream_mse).weights
                                : equal_weights(k_count);
    r.weights = w.w;
    if (cfg_.mse_term) r.mse = std::accumulate(r.stream_mse.begin(), r.stream_mse.end(), 0.0);

    std::vector<Prediction> preds;
    for (std::size_t k = 0; k < k_count; ++k) {
        const bool want_enh = !g_enh.empty();
        StreamOutcome s = class_stream(class_, cls, ycbcr_to_rgb(rebuilt[k]), label, w.at(k), g_cls, want_enh);
        r.stream_loss.push_back(s.loss);
        r.cls += w.at(k) * s.loss;
        preds.push_back(std::move(s.pred));
        if (want_enh) {
            Plane dy = luma_gradient(rebuilt[k], s.input_grad);
            if (cfg_.mse_term) add_mse_gradient(dy, rebuilt[k].y, targets[k], cfg_.mse_weight);
            enhance_.backward_taps(enh[k], passes[k], filter_tap_gradient(ycc.y, dy, cfg_.filter_size), g_enh[k]);
        }
    }
    StreamOutcome rgb = class_stream(class_, cls, img, label, w.w_rgb, g_cls, false);
    r.stream_loss.push_back(rgb.loss);
    r.cls += w.w_rgb * rgb.loss;
    preds.push_back(std::move(rgb.pred));
    r.total = cfg_.mse_weight * r.mse + r.cls;
    r.prediction = fused_predict(preds, w);
    return r;
}

// ---------------------------------------------------------------------------
// Epoch driver

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    Rng r(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    return r.next();
}

struct GradSet {
    std::vector<Gradients> enh;
    Gradients cls;

    void zero() {
        for (auto& g : enh) g.fill(0.0);
        cls.fill(0.0);
    }
    void add(const GradSet& o) {
        for (std::size_t k = 0; k < enh.size(); ++k) enh[k].add_scaled(o.enh[k], 1.0);
        cls.add_scaled(o.cls, 1.0);
    }
    void scale(double s) {
        for (auto& g : enh)
            for (double& v : g.values()) v *= s;
        for (double& v : cls.values()) v *= s;
    }
};

struct Crop {
    ImageRGB image;
    std::vector<Plane> targets;  // requested methods, in order
    std::size_t label;
};

struct EpochStats {
    double total = 0.0, mse = 0.0, cls = 0.0;
    std::size_t correct = 0, count = 0;
    std::vector<double> weight_sum;
};

using SampleFn = std::function<SampleLoss(const Crop&, GradSet&)>;
using StepFn = std::function<void(const GradSet&, std::size_t step)>;

class EpochDriver {
public:
    EpochDriver(const RunConfig& cfg, std::string_view phase, const std::vector<LoadedSample>& data,
                std::vector<std::size_t> target_methods, GradSet proto, const BatchHook& hook,
                const NetParams& cls_params)
        : cfg_(cfg), phase_(phase), data_(data), methods_(std::move(target_methods)),
          proto_(std::move(proto)), hook_(hook), cls_params_(cls_params) {}

    EpochStats run(std::size_t epoch, const SampleFn& sample_fn, const StepFn& step_fn) {
        const std::size_t n = data_.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(mix(mix(cfg_.seed, fnv1a(phase_)), epoch));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        const std::size_t threads = static_cast<std::size_t>(kernels::thread_count());
        std::vector<GradSet> buffers(std::min(threads, cfg_.batch_size), proto_);
        GradSet batch_grads = proto_;
        EpochStats stats;
        for (std::size_t start = 0, b = 0; start < n; start += cfg_.batch_size, ++b) {
            const std::size_t end = std::min(n, start + cfg_.batch_size);
            std::vector<Crop> crops;
            for (std::size_t i = start; i < end; ++i) crops.push_back(make_crop(order[i], epoch));
            std::vector<SampleLoss> losses(crops.size());
            batch_grads.zero();
            for (std::size_t c0 = 0; c0 < crops.size(); c0 += buffers.size()) {
                const std::size_t c1 = std::min(crops.size(), c0 + buffers.size());
#pragma omp parallel for num_threads(static_cast<int>(buffers.size())) schedule(static)
                for (std::size_t i = c0; i < c1; ++i) {
                    GradSet& buf = buffers[i - c0];
                    buf.zero();
                    losses[i] = sample_fn(crops[i], buf);
                }
                for (std::size_t i = c0; i < c1; ++i) batch_grads.add(buffers[i - c0]);
            }
            const double inv = 1.0 / static_cast<double>(crops.size());
            batch_grads.scale(inv);
            double batch_loss = 0.0;
            for (std::size_t i = 0; i < crops.size(); ++i) {
                const SampleLoss& l = losses[i];
                batch_loss += l.total;
                stats.total += l.total;
                stats.mse += l.mse;
                stats.cls += l.cls;
                stats.correct += l.prediction.argmax() == crops[i].label;
                ++stats.count;
                if (stats.weight_sum.size() < l.weights.size()) stats.weight_sum.resize(l.weights.size(), 0.0);
                for (std::size_t k = 0; k < l.weights.size(); ++k) stats.weight_sum[k] += l.weights[k];
            }
            if (hook_) {
                std::vector<ImageRGB> inputs;
                std::vector<std::size_t> labels;
                for (const Crop& c : crops) {
                    inputs.push_back(c.image);
                    labels.push_back(c.label);
                }
                hook_(BatchTrace{phase_, epoch, b, inputs, labels, cls_params_, batch_loss * inv});
            }
            step_fn(batch_grads, step_++);
        }
        return stats;
    }

private:
    Crop make_crop(std::size_t idx, std::size_t epoch) const {
        const LoadedSample& s = data_[idx];
        Rng rng(mix(mix(mix(cfg_.seed, fnv1a(phase_)), epoch), idx + 1));
        const AugmentDraw d = draw_augment(cfg_.augment, rng);
        Crop c{apply_augment(s.image, d, cfg_.augment.crop_extent), {}, s.label};
        for (std::size_t m : methods_) {
            if (s.targets.at(m).empty())
                throw MissingTargetError(s.path, "<" + std::string(method_name(static_cast<EnhanceMethod>(m))) + " target>");
            c.targets.push_back(apply_geometry(s.targets[m], d, cfg_.augment.crop_extent));
        }
        return c;
    }

    const RunConfig& cfg_;
    std::string phase_;
    const std::vector<LoadedSample>& data_;
    std::vector<std::size_t> methods_;
    GradSet proto_;
    const BatchHook& hook_;
    const NetParams& cls_params_;
    std::size_t step_ = 0;
};

EpochLog make_log(std::string_view phase, std::size_t epoch, const EpochStats& s, double val_acc) {
    const double n = static_cast<double>(std::max<std::size_t>(1, s.count));
    return {std::string(phase), epoch, s.total / n, s.mse / n, s.cls / n,
            static_cast<double>(s.correct) / n, val_acc};
}

constexpr double kNoVal = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ---------------------------------------------------------------------------
// Trainers

void Trainer::log_epoch(std::vector<EpochLog>& log, EpochLog entry) const {
    if (epoch_hook_) epoch_hook_(entry);
    log.push_back(std::move(entry));
}

ClassRun Trainer::train_rgb(const std::vector<LoadedSample>& train, const std::vector<LoadedSample>& val,
                            NetParams init, std::size_t epochs, bool fine_tune, std::string_view phase) const {
    ClassRun run{std::move(init), {}};
    const std::vector<double> mult =
        fine_tune ? class_.fine_tune_multipliers(cfg_.body_lr_mult, cfg_.head_lr_mult) : std::vector<double>{};
    SgdState state;
    EpochDriver driver(cfg_, phase, train, {}, GradSet{{}, class_.network().zero_gradients()}, hook_, run.classnet);
    TrainedModels probe{Approach::FC, {}, {}, {}, std::nullopt, std::nullopt};
    std::vector<std::size_t> val_labels;
    for (const auto& s : val) val_labels.push_back(s.label);
    for (std::size_t e = 0; e < epochs; ++e) {
        const EpochStats st = driver.run(
            e, [&](const Crop& c, GradSet& g) { return rgb_sample(run.classnet, c.image, c.label, &g.cls); },
            [&](const GradSet& g, std::size_t step) { sgd_step(run.classnet, g.cls, cfg_.class_sgd, step, state, mult); });
        double val_acc = kNoVal;
        if (!val.empty()) {
            probe.classnet = run.classnet;
            val_acc = accuracy(evaluate(*this, probe, val, false).per_stream.back(), val_labels);
        }
        log_epoch(run.log, make_log(phase, e, st, val_acc));
    }
    return run;
}

A1Run Trainer::train_approach1(const std::vector<LoadedSample>& train, const std::vector<LoadedSample>& val,
                               EnhanceMethod method, NetParams class_init, std::size_t epochs,
                               std::string_view phase) const {
    A1Run run{init_enhance(method), std::move(class_init), {}};
    const bool fine_tune = cfg_.pretrain_epochs > 0;
    const std::vector<double> mult =
        fine_tune ? class_.fine_tune_multipliers(cfg_.body_lr_mult, cfg_.head_lr_mult) : std::vector<double>{};
    SgdState s_enh, s_cls;
    GradSet proto{{enhance_.network().zero_gradients()}, class_.network().zero_gradients()};
    EpochDriver driver(cfg_, phase, train, {method_index(method)}, proto, hook_, run.classnet);
    TrainedModels probe{Approach::A1, {method}, {}, {}, std::nullopt, std::nullopt};
    std::vector<std::size_t> val_labels;
    for (const auto& s : val) val_labels.push_back(s.label);
    for (std::size_t e = 0; e < epochs; ++e) {
        const EpochStats st = driver.run(
            e,
            [&](const Crop& c, GradSet& g) {
                return a1_sample(run.enhance, run.classnet, c.image, c.targets[0], c.label, &g.enh[0], &g.cls);
            },
            [&](const GradSet& g, std::size_t step) {
                sgd_step(run.enhance, g.enh[0], cfg_.enhance_sgd, step, s_enh);
                sgd_step(run.classnet, g.cls, cfg_.class_sgd, step, s_cls, mult);
            });
        double val_acc = kNoVal;
        if (!val.empty()) {
            probe.enhance = {run.enhance};
            probe.classnet = run.classnet;
            val_acc = accuracy(evaluate(*this, probe, val, false).per_stream.back(), val_labels);
        }
        log_epoch(run.log, make_log(phase, e, st, val_acc));
    }
    return run;
}

StaticFilterBank Trainer::derive_static_filters(std::span<const NetParams> per_method,
                                                const std::vector<LoadedSample>& train) const {
    if (train.empty()) throw std::invalid_argument("derive_static_filters: empty training set");
    const std::size_t s = cfg_.filter_size;
    StaticFilterBank bank;
    for (const NetParams& p : per_method) {
        Plane sum(s, s);
        for (const LoadedSample& ls : train) {
            const DynamicFilter f = enhance_.generate_filter(p, luminance(ls.image)).filter;
            for (std::size_t k = 0; k < sum.size(); ++k) sum.values()[k] += f.taps.values()[k];
        }
        for (double& v : sum.values()) v /= static_cast<double>(train.size());
        bank.filters.push_back({std::move(sum)});
    }
    bank.filters.push_back(DynamicFilter::identity(s));
    return bank;
}

StreamWeights Trainer::static_weights(const StaticFilterBank& bank, const std::vector<LoadedSample>& train) const {
    if (cfg_.weighting == Weighting::Equal) return equal_weights(bank.method_count());
    std::vector<double> m(bank.method_count(), 0.0);
    for (const LoadedSample& ls : train) {
        const Plane y = luminance(ls.image);
        for (std::size_t k = 0; k < m.size(); ++k)
            m[k] += mse(apply_filter(y, bank.filters[k]), ls.targets.at(k)) / static_cast<double>(train.size());
    }
    return compute_weights_from_mse(m).weights;
}

ClassRun Trainer::train_stat(const std::vector<LoadedSample>& train, const std::vector<LoadedSample>& val,
                             const StaticFilterBank& bank, const StreamWeights& weights, NetParams class_init,
                             std::size_t epochs) const {
    if (bank.filters.size() != weights.stream_count())
        throw std::invalid_argument("train_stat: bank arity does not match weights");
    ClassRun run{std::move(class_init), {}};
    const bool fine_tune = cfg_.pretrain_epochs > 0;
    const std::vector<double> mult =
        fine_tune ? class_.fine_tune_multipliers(cfg_.body_lr_mult, cfg_.head_lr_mult) : std::vector<double>{};
    SgdState state;
    EpochDriver driver(cfg_, "a2", train, {}, GradSet{{}, class_.network().zero_gradients()}, hook_, run.classnet);
    TrainedModels probe{Approach::A2, {kAllMethods.begin(), kAllMethods.end()}, {}, {}, bank, weights};
    std::vector<std::size_t> val_labels;
    for (const auto& s : val) val_labels.push_back(s.label);
    for (std::size_t e = 0; e < epochs; ++e) {
        const EpochStats st = driver.run(
            e, [&](const Crop& c, GradSet& g) { return stat_sample(bank, weights, run.classnet, c.image, c.label, &g.cls); },
            [&](const GradSet& g, std::size_t step) { sgd_step(run.classnet, g.cls, cfg_.class_sgd, step, state, mult); });
        double val_acc = kNoVal;
        if (!val.empty()) {
            probe.classnet = run.classnet;
            val_acc = accuracy(evaluate(*this, probe, val, false).fused, val_labels);
        }
        log_epoch(run.log, make_log("a2", e, st, val_acc));
    }
    return run;
}

A3Run Trainer::train_dyn(const std::vector<LoadedSample>& train, const std::vector<LoadedSample>& val,
                         NetParams class_init, std::size_t epochs) const {
    A3Run run;
    run.classnet = std::move(class_init);
    std::vector<std::size_t> methods;
    for (EnhanceMethod m : kAllMethods) {
        run.enhance.push_back(init_enhance(m));
        methods.push_back(method_index(m));
    }
    const bool fine_tune = cfg_.pretrain_epochs > 0;
    const std::vector<double> mult =
        fine_tune ? class_.fine_tune_multipliers(cfg_.body_lr_mult, cfg_.head_lr_mult) : std::vector<double>{};
    std::vector<SgdState> s_enh(kMethodCount);
    SgdState s_cls;
    GradSet proto{std::vector<Gradients>(kMethodCount, enhance_.network().zero_gradients()),
                  class_.network().zero_gradients()};
    EpochDriver driver(cfg_, "a3", train, methods, proto, hook_, run.classnet);
    run.weights = equal_weights(kMethodCount);
    TrainedModels probe{Approach::A3, {kAllMethods.begin(), kAllMethods.end()}, {}, {}, std::nullopt, std::nullopt};
    std::vector<std::size_t> val_labels;
    for (const auto& s : val) val_labels.push_back(s.label);
    for (std::size_t e = 0; e < epochs; ++e) {
        const EpochStats st = driver.run(
            e,
            [&](const Crop& c, GradSet& g) {
                return dyn_sample(run.enhance, run.classnet, c.image, c.targets, c.label, g.enh, &g.cls);
            },
            [&](const GradSet& g, std::size_t step) {
                for (std::size_t k = 0; k < kMethodCount; ++k)
                    sgd_step(run.enhance[k], g.enh[k], cfg_.enhance_sgd, step, s_enh[k]);
                sgd_step(run.classnet, g.cls, cfg_.class_sgd, step, s_cls, mult);
            });
        // The frozen test-time weights are the running mean over the final epoch.
        if (st.count > 0 && st.weight_sum.size() == kMethodCount) {
            std::vector<double> w(kMethodCount);
            for (std::size_t k = 0; k < kMethodCount; ++k) w[k] = st.weight_sum[k] / static_cast<double>(st.count);
            const double total = std::accumulate(w.begin(), w.end(), 0.0);
            for (double& v : w) v /= total;
            run.weights = {std::move(w), 1.0};
        }
        double val_acc = kNoVal;
        if (!val.empty()) {
            probe.enhance = run.enhance;
            probe.classnet = run.classnet;
            probe.weights = run.weights;
            val_acc = accuracy(evaluate(*this, probe, val, false).fused, val_labels);
        }
        log_epoch(run.log, make_log("a3", e, st, val_acc));
    }
    return run;
}

ClassRun pretrain_classnet(const Trainer& trainer, const std::vector<LoadedSample>& train,
                           const std::vector<LoadedSample>& val) {
    const RunConfig& cfg = trainer.config();
    if (cfg.pretrain_epochs == 0) return {trainer.init_classnet(), {}};
    return trainer.train_rgb(train, val, trainer.init_classnet(), cfg.pretrain_epochs, false, "pretrain");
}

RunResult run_training(const Trainer& trainer, const std::vector<LoadedSample>& train,
                       const std::vector<LoadedSample>& val) {
    ClassRun p1 = pretrain_classnet(trainer, train, val);
    RunResult res = run_phase2(trainer, train, val, std::move(p1.classnet));
    res.log.insert(res.log.begin(), p1.log.begin(), p1.log.end());
    return res;
}

RunResult run_phase2(const Trainer& trainer, const std::vector<LoadedSample>& train,
                     const std::vector<LoadedSample>& val, NetParams classnet) {
    const RunConfig& cfg = trainer.config();
    RunResult res;
    res.models.approach = cfg.approach;
    NetParams cls = std::move(classnet);
    auto append = [&](std::vector<EpochLog>& log) { res.log.insert(res.log.end(), log.begin(), log.end()); };
    switch (cfg.approach) {
        case Approach::FC: {
            ClassRun r = trainer.train_rgb(train, val, std::move(cls), cfg.epochs, cfg.pretrain_epochs > 0, "fc");
            res.models.classnet = std::move(r.classnet);
            append(r.log);
            break;
        }
        case Approach::A1: {
            A1Run r = trainer.train_approach1(train, val, cfg.method, std::move(cls), cfg.epochs, "a1");
            res.models.methods = {cfg.method};
            res.models.enhance = {std::move(r.enhance)};
            res.models.classnet = std::move(r.classnet);
            append(r.log);
            break;
        }
        case Approach::A2: {
            std::vector<NetParams> per_method;
            for (EnhanceMethod m : kAllMethods) {
                A1Run r = trainer.train_approach1(train, {}, m, cls, cfg.bank_epochs,
                                                  "bank-" + std::string(method_name(m)));
                per_method.push_back(std::move(r.enhance));
                append(r.log);
            }
            StaticFilterBank bank = trainer.derive_static_filters(per_method, train);
            StreamWeights w = trainer.static_weights(bank, train);
            ClassRun r = trainer.train_stat(train, val, bank, w, std::move(cls), cfg.epochs);
            res.models.methods.assign(kAllMethods.begin(), kAllMethods.end());
            res.models.classnet = std::move(r.classnet);
            res.models.bank = std::move(bank);
            res.models.weights = std::move(w);
            append(r.log);
            break;
        }
        case Approach::A3: {
            A3Run r = trainer.train_dyn(train, val, std::move(cls), cfg.epochs);
            res.models.methods.assign(kAllMethods.begin(), kAllMethods.end());
            res.models.enhance = std::move(r.enhance);
            res.models.classnet = std::move(r.classnet);
            res.models.weights = std::move(r.weights);
            append(r.log);
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<DynamicFilter> stream_filters(const Trainer& trainer, const TrainedModels& models, const Plane& y) {
    std::vector<DynamicFilter> out;
    if (models.bank) {
        out.assign(models.bank->filters.begin(), models.bank->filters.end() - 1);
        return out;
    }
    for (const NetParams& p : models.enhance) out.push_back(trainer.enhance_net().generate_filter(p, y).filter);
    return out;
}

Evaluation evaluate(const Trainer& trainer, const TrainedModels& models, const std::vector<LoadedSample>& samples,
                    bool with_map) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty split");
    Evaluation ev;
    for (EnhanceMethod m : models.methods) ev.stream_names.emplace_back(method_name(m));
    const bool multi = models.approach == Approach::A2 || models.approach == Approach::A3;
    if (models.approach != Approach::A1) ev.stream_names.emplace_back("rgb");
    ev.per_stream.assign(ev.stream_names.size(), std::vector<Prediction>(samples.size()));
    if (multi) ev.fused.resize(samples.size());
    const std::size_t extent = trainer.config().input_extent;
    const std::size_t n_enh = models.methods.size();
    std::vector<double> gain_sum(n_enh, 0.0), psnr_sum(n_enh, 0.0);
    std::vector<std::size_t> gain_count(n_enh, 0);

#pragma omp parallel for schedule(dynamic) num_threads(kernels::thread_count())
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const LoadedSample& s = samples[i];
        const ImageRGB crop = center_crop(s.image, extent);
        const Plane y = luminance(crop);
        std::vector<DynamicFilter> filters =
            models.approach == Approach::FC ? std::vector<DynamicFilter>{} : stream_filters(trainer, models, y);
        std::vector<Prediction> preds;
        for (const DynamicFilter& f : filters) {
            preds.push_back(predict(trainer.class_net().forward(models.classnet, enhance_rgb(crop, f)).output));
        }
        if (models.approach != Approach::A1)
            preds.push_back(predict(trainer.class_net().forward(models.classnet, crop).output));
        if (multi) ev.fused[i] = fused_predict(preds, *models.weights);
        for (std::size_t k = 0; k < preds.size(); ++k) ev.per_stream[k][i] = preds[k];
    }
    // Enhancement quality at full resolution, serial so sums are ordered.
    if (models.approach == Approach::A1 || models.approach == Approach::A3 || models.approach == Approach::A2) {
        for (const LoadedSample& s : samples) {
            const Plane y = luminance(s.image);
            const std::vector<DynamicFilter> filters = stream_filters(trainer, models, y);
            for (std::size_t k = 0; k < n_enh; ++k) {
                if (s.targets.size() != kMethodCount) continue;
                const Plane& t = s.targets[static_cast<std::size_t>(models.methods[k])];
                if (t.empty()) continue;
                const double after = psnr(apply_filter(y, filters[k]), t);
                const double before = psnr(y, t);
                if (!std::isfinite(after) || !std::isfinite(before)) continue;
                gain_sum[k] += after - before;
                psnr_sum[k] += after;
                ++gain_count[k];
            }
        }
    }

    for (const LoadedSample& s : samples) ev.labels.push_back(s.label);
    for (std::size_t k = 0; k < ev.stream_names.size(); ++k)
        ev.rows.push_back({ev.stream_names[k], "accuracy", accuracy(ev.per_stream[k], ev.labels)});
    if (multi) ev.rows.push_back({"fused", "accuracy", accuracy(ev.fused, ev.labels)});
    for (std::size_t k = 0; k < n_enh; ++k)
        if (gain_count[k] > 0) {
            const double n = static_cast<double>(gain_count[k]);
            ev.rows.push_back({ev.stream_names[k], "psnr_db", psnr_sum[k] / n});
            ev.rows.push_back({ev.stream_names[k], "psnr_gain_db", gain_sum[k] / n});
        }
    if (with_map) {
        std::vector<std::vector<std::size_t>> label_sets;
        for (const LoadedSample& s : samples) label_sets.push_back(s.labels);
        auto map_of = [&](const std::vector<Prediction>& preds) {
            std::vector<std::vector<double>> scores(trainer.class_count(), std::vector<double>(preds.size()));
            for (std::size_t i = 0; i < preds.size(); ++i)
                for (std::size_t c = 0; c < scores.size(); ++c) scores[c][i] = preds[i].probs[c];
            return mean_average_precision(scores, label_sets).map;
        };
        for (std::size_t k = 0; k < ev.stream_names.size(); ++k)
            ev.rows.push_back({ev.stream_names[k], "map", map_of(ev.per_stream[k])});
        if (multi) ev.rows.push_back({"fused", "map", map_of(ev.fused)});
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Persistence

void write_log_csv(const fs::path& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    out << "phase,epoch,loss_total,loss_mse,loss_class,train_accuracy,val_accuracy\n";
    for (const EpochLog& e : log)
        out << e.phase << ',' << e.epoch << ',' << format_number(e.loss_total) << ',' << format_number(e.loss_mse)
            << ',' << format_number(e.loss_class) << ',' << format_number(e.train_accuracy) << ','
            << format_number(e.val_accuracy) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

void write_weights_csv(const fs::path& path, const std::vector<EnhanceMethod>& methods, const StreamWeights& w) {
    std::ofstream out(path);
    out << "method,weight\n";
    for (std::size_t k = 0; k < methods.size(); ++k) out << method_name(methods[k]) << ',' << format_number(w.w.at(k)) << '\n';
    out << "rgb," << format_number(w.w_rgb) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

StreamWeights read_weights_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    StreamWeights w;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        const std::string name = line.substr(0, comma);
        const double v = std::stod(line.substr(comma + 1));
        if (name == "rgb")
            w.w_rgb = v;
        else
            w.w.push_back(v);
    }
    return w;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path);
    out << "stream,metric,value\n";
    for (const MetricRow& r : rows) out << r.stream << ',' << r.metric << ',' << format_number(r.value) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

namespace {
void write_filter_text(const fs::path& path, const DynamicFilter& f) {
    std::ofstream out(path);
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (std::size_t j = 0; j < f.size(); ++j) out << (j ? " " : "") << format_number(f.taps(i, j));
        out << '\n';
    }
}
}  // namespace

void save_models(const fs::path& dir, const Trainer& trainer, const TrainedModels& models) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "models.txt");
        out << "approach=" << approach_name(models.approach) << '\n' << "methods=";
        for (std::size_t k = 0; k < models.methods.size(); ++k) out << (k ? "," : "") << method_name(models.methods[k]);
        out << '\n';
    }
    save_checkpoint(dir / "classnet.ckpt", trainer.class_net().network(), models.classnet);
    for (std::size_t k = 0; k < models.enhance.size(); ++k)
        save_checkpoint(dir / ("enhance_" + std::string(method_name(models.methods[k])) + ".ckpt"),
                        trainer.enhance_net().network(), models.enhance[k]);
    if (models.bank) {
        for (std::size_t k = 0; k < models.bank->method_count(); ++k) {
            const std::string stem = "bank_" + std::string(method_name(models.methods[k]));
            write_plane(dir / (stem + ".plane"), models.bank->filters[k].taps);
            write_filter_text(dir / (stem + ".txt"), models.bank->filters[k]);
        }
    }
    if (models.weights) write_weights_csv(dir / "weights.csv", models.methods, *models.weights);
}

TrainedModels load_models(const fs::path& dir, const Trainer& trainer) {
    const KeyValues kv = KeyValues::load(dir / "models.txt");
    TrainedModels m;
    m.approach = parse_approach(kv.get("approach"));
    std::istringstream ms(kv.has("methods") ? kv.get("methods") : "");
    std::string name;
    while (std::getline(ms, name, ','))
        if (!name.empty()) m.methods.push_back(*parse_method(name));
    m.classnet = load_checkpoint(dir / "classnet.ckpt", trainer.class_net().network());
    if (m.approach == Approach::A1 || m.approach == Approach::A3)
        for (EnhanceMethod meth : m.methods)
            m.enhance.push_back(load_checkpoint(dir / ("enhance_" + std::string(method_name(meth)) + ".ckpt"),
                                                trainer.enhance_net().network()));
    if (m.approach == Approach::A2) {
        StaticFilterBank bank;
        for (EnhanceMethod meth : m.methods)
            bank.filters.push_back({read_plane(dir / ("bank_" + std::string(method_name(meth)) + ".plane"))});
        bank.filters.push_back(DynamicFilter::identity(trainer.config().filter_size));
        m.bank = std::move(bank);
    }
    if (m.approach == Approach::A2 || m.approach == Approach::A3) {
        if (!fs::exists(dir / "weights.csv")) throw IoError("missing frozen weights " + (dir / "weights.csv").string());
        m.weights = read_weights_csv(dir / "weights.csv");
    }
    return m;
}

}  // namespace dynenh

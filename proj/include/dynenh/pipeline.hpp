#pragma once

// Joint enhancement + classification training:
//   FC  - ClassNet on RGB only (baseline and fine-tuning phase 1)
//   A1  - one dynamic filter per image, loss = MSE(T, Y') + L(P, y)
//   A2  - K static (mean) filters plus identity, loss = sum_k W_k L_k
//   A3  - K dynamic filters, loss = sum_k MSE_k + sum_k W_k L_k + L_rgb,
//         W recomputed per sample from that sample's MSEs

#include "dynenh/autonet.hpp"
#include "dynenh/classify.hpp"
#include "dynenh/config.hpp"
#include "dynenh/dataio.hpp"
#include "dynenh/dynamic_filter.hpp"
#include "dynenh/enhance.hpp"
#include "dynenh/weighting.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynenh {

enum class Approach { FC, A1, A2, A3 };
enum class Weighting { Equal, Mse };

std::string_view approach_name(Approach a);
Approach parse_approach(std::string_view s);
std::string_view weighting_name(Weighting w);
Weighting parse_weighting(std::string_view s);

struct RunConfig {
    Approach approach = Approach::A3;
    EnhanceMethod method = EnhanceMethod::Imsharp;  // A1 only
    Weighting weighting = Weighting::Mse;
    std::size_t filter_size = 6;
    std::size_t input_extent = 64;
    std::size_t pretrain_epochs = 0;  // phase 1: ClassNet on RGB
    std::size_t epochs = 10;          // phase 2
    std::size_t bank_epochs = 4;      // A1 epochs per method when A2 builds its bank
    std::size_t batch_size = 4;
    SgdConfig class_sgd{0.005, 5e-4, 0.9, 0.1, 15000};
    SgdConfig enhance_sgd{1e-5, 5e-4, 0.9, 0.1, 15000};
    double body_lr_mult = 0.1;
    double head_lr_mult = 1.0;
    bool mse_term = true;  // A3 ablation: drop the enhancement MSE terms
    double mse_weight = 1000.0;  // multiplies the MSE terms in the A1/A3 losses (pixels in [0,1])
    std::uint64_t seed = 7;
    AugmentConfig augment{};
    EnhanceParams enhance{};

    std::filesystem::path data_dir;
    std::filesystem::path cache_dir;
    SplitRatios split{};
    std::uint64_t data_seed = 1;

    KeyValues to_key_values() const;
    /// Unknown keys are rejected; missing keys keep their defaults.
    static RunConfig from_key_values(const KeyValues& kv);
    void validate() const;
};

/// Every recognised config key with its default, for --help.
std::vector<std::pair<std::string, std::string>> config_key_help();

struct StaticFilterBank {
    std::vector<DynamicFilter> filters;  // K method filters, then identity

    std::size_t method_count() const { return filters.empty() ? 0 : filters.size() - 1; }
};

class MissingTargetError : public std::runtime_error {
public:
    MissingTargetError(const std::filesystem::path& image, const std::filesystem::path& target)
        : std::runtime_error("missing cached target " + target.string() + " for image " +
                             image.string() + "; run `dynenh gen-targets` first"),
          image_(image) {}
    const std::filesystem::path& image() const { return image_; }

private:
    std::filesystem::path image_;
};

struct LoadedSample {
    std::filesystem::path path;
    ImageRGB image;
    std::vector<Plane> targets;  // indexed by EnhanceMethod; empty when not loaded
    std::size_t label = 0;
    std::vector<std::size_t> labels;  // all positive labels
};

/// Reads images and the cached targets for `methods`. Throws
/// MissingTargetError naming the first image without a cached target.
std::vector<LoadedSample> load_samples(const DatasetManifest& manifest, Split split,
                                       const std::filesystem::path& cache_dir,
                                       std::span<const EnhanceMethod> methods);

/// Replaces the luminance of `rgb` by apply_filter(Y, f) and converts back.
/// An exact identity filter returns `rgb` unchanged.
ImageRGB enhance_rgb(const ImageRGB& rgb, const DynamicFilter& f);

/// d loss / d Y' given d loss / d (ClassNet input) for the image rebuilt
/// from (Y', Cb, Cr); channels clamped during reconstruction pass no gradient.
Plane luma_gradient(const YCbCr& rebuilt, const Tensor& input_grad);

struct EpochLog {
    std::string phase;
    std::size_t epoch = 0;
    double loss_total = 0.0;
    double loss_mse = 0.0;
    double loss_class = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;  // NaN without a validation split
};

struct BatchTrace {
    std::string_view phase;
    std::size_t epoch = 0;
    std::size_t batch = 0;
    std::span<const ImageRGB> inputs;  // augmented crops, batch order
    std::span<const std::size_t> labels;
    const NetParams& class_params;  // before this batch's update
    double loss = 0.0;              // batch mean of the per-sample training loss
};
using BatchHook = std::function<void(const BatchTrace&)>;
using EpochHook = std::function<void(const EpochLog&)>;

/// Per-sample loss terms.
struct SampleLoss {
    double mse = 0.0;    // sum of enhancement MSE terms
    double cls = 0.0;    // (weighted) classification term
    double total = 0.0;
    std::vector<double> stream_mse;   // A3: per-method MSE
    std::vector<double> stream_loss;  // per-stream softmax loss
    std::vector<double> weights;      // A3: this sample's W
    Prediction prediction;            // fused / single-stream prediction
};

struct ClassRun {
    NetParams classnet;
    std::vector<EpochLog> log;
};

struct A1Run {
    NetParams enhance;
    NetParams classnet;
    std::vector<EpochLog> log;
};

struct A3Run {
    std::vector<NetParams> enhance;  // one per method, stream order
    NetParams classnet;
    StreamWeights weights;           // running mean over the final epoch
    std::vector<EpochLog> log;
};

class Trainer {
public:
    Trainer(RunConfig cfg, std::size_t class_count);

    const RunConfig& config() const { return cfg_; }
    const EnhanceNet& enhance_net() const { return enhance_; }
    const ClassNet& class_net() const { return class_; }
    std::size_t class_count() const { return class_.config().class_count; }

    NetParams init_classnet() const;
    NetParams init_enhance(EnhanceMethod m) const;

    void set_batch_hook(BatchHook hook) { hook_ = std::move(hook); }
    /// Called after every epoch of every phase, e.g. for progress output.
    void set_epoch_hook(EpochHook hook) { epoch_hook_ = std::move(hook); }

    // --- per-sample primitives; parameter gradients are accumulated -------
    SampleLoss rgb_sample(const NetParams& cls, const ImageRGB& img, std::size_t label,
                          Gradients* g_cls) const;
    SampleLoss a1_sample(const NetParams& enh, const NetParams& cls, const ImageRGB& img,
                         const Plane& target, std::size_t label, Gradients* g_enh,
                         Gradients* g_cls) const;
    SampleLoss stat_sample(const StaticFilterBank& bank, const StreamWeights& w,
                           const NetParams& cls, const ImageRGB& img, std::size_t label,
                           Gradients* g_cls) const;
    SampleLoss dyn_sample(std::span<const NetParams> enh, const NetParams& cls,
                          const ImageRGB& img, std::span<const Plane> targets, std::size_t label,
                          std::span<Gradients> g_enh, Gradients* g_cls) const;

    // --- trainers ----------------------------------------------------------
    /// FC-CNN: RGB only. `fine_tune` applies the body/head multipliers.
    ClassRun train_rgb(const std::vector<LoadedSample>& train,
                       const std::vector<LoadedSample>& val, NetParams init, std::size_t epochs,
                       bool fine_tune, std::string_view phase) const;
    A1Run train_approach1(const std::vector<LoadedSample>& train,
                          const std::vector<LoadedSample>& val, EnhanceMethod method,
                          NetParams class_init, std::size_t epochs,
                          std::string_view phase) const;
    StaticFilterBank derive_static_filters(std::span<const NetParams> per_method,
                                           const std::vector<LoadedSample>& train) const;
    /// Equal weights, or MSE weights from the mean static-filter MSE on `train`.
    StreamWeights static_weights(const StaticFilterBank& bank,
                                 const std::vector<LoadedSample>& train) const;
    ClassRun train_stat(const std::vector<LoadedSample>& train,
                        const std::vector<LoadedSample>& val, const StaticFilterBank& bank,
                        const StreamWeights& weights, NetParams class_init,
                        std::size_t epochs) const;
    A3Run train_dyn(const std::vector<LoadedSample>& train, const std::vector<LoadedSample>& val,
                    NetParams class_init, std::size_t epochs) const;

private:
    std::size_t method_index(EnhanceMethod m) const { return static_cast<std::size_t>(m); }
    void log_epoch(std::vector<EpochLog>& log, EpochLog entry) const;

    RunConfig cfg_;
    EnhanceNet enhance_;
    ClassNet class_;
    BatchHook hook_;
    EpochHook epoch_hook_;
};

/// Everything a finished run needs for evaluation.
struct TrainedModels {
    Approach approach = Approach::FC;
    std::vector<EnhanceMethod> methods;  // A1: {method}; A3: all K
    std::vector<NetParams> enhance;
    NetParams classnet;
    std::optional<StaticFilterBank> bank;
    std::optional<StreamWeights> weights;
};

struct RunResult {
    TrainedModels models;
    std::vector<EpochLog> log;
};

/// Trains the configured approach end to end (phase 1 then phase 2).
RunResult run_training(const Trainer& trainer, const std::vector<LoadedSample>& train,
                       const std::vector<LoadedSample>& val);

/// Phase 1 alone: a fresh ClassNet trained on RGB for `pretrain_epochs`.
/// Depends only on the seed and the class settings, so approaches can share it.
ClassRun pretrain_classnet(const Trainer& trainer, const std::vector<LoadedSample>& train,
                           const std::vector<LoadedSample>& val);

/// Phase 2 alone, starting from `classnet`; the log holds phase-2 epochs only.
RunResult run_phase2(const Trainer& trainer, const std::vector<LoadedSample>& train,
                     const std::vector<LoadedSample>& val, NetParams classnet);

struct MetricRow {
    std::string stream;
    std::string metric;
    double value = 0.0;
};

struct Evaluation {
    std::vector<std::string> stream_names;
    std::vector<std::vector<Prediction>> per_stream;  // [stream][sample]
    std::vector<Prediction> fused;                    // empty for single-stream runs
    std::vector<std::size_t> labels;
    std::vector<MetricRow> rows;
};

/// Centre-crop classification of every stream plus fused prediction;
/// enhancement PSNR gains at full resolution when targets are loaded.
Evaluation evaluate(const Trainer& trainer, const TrainedModels& models,
                    const std::vector<LoadedSample>& samples, bool with_map);

/// Filters one image produced by a model: K bank filters, K dynamic filters
/// or the single A1 filter, in stream order.
std::vector<DynamicFilter> stream_filters(const Trainer& trainer, const TrainedModels& models,
                                          const Plane& y);

// --- run directory persistence -------------------------------------------
void save_models(const std::filesystem::path& dir, const Trainer& trainer,
                 const TrainedModels& models);
TrainedModels load_models(const std::filesystem::path& dir, const Trainer& trainer);
void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);
void write_weights_csv(const std::filesystem::path& path, const std::vector<EnhanceMethod>& methods,
                       const StreamWeights& w);
StreamWeights read_weights_csv(const std::filesystem::path& path);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

/// Shortest round-trip decimal form, used for every logged number.
std::string format_number(double v);

}  // namespace dynenh

#pragma once

#include "dynenh/autonet.hpp"
#include "dynenh/enhance.hpp"
#include "dynenh/imgcore.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynenh {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Sample {
    std::filesystem::path path;  // absolute
    std::size_t label = 0;
    std::vector<std::size_t> label_set;  // empty unless a manifest lists extra labels

    /// label plus any extra labels, without duplicates.
    std::vector<std::size_t> all_labels() const;
};

struct SplitRatios {
    double train = 0.5;
    double val = 0.1;
    double test = 0.4;
};

enum class Split { Train, Val, Test };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<std::string> class_names;
    std::vector<Sample> train, val, test;
    std::uint64_t seed = 0;

    std::size_t class_count() const { return class_names.size(); }
    const std::vector<Sample>& split(Split s) const;
    bool has_label_sets() const;
};

/// Loads `root/manifest.csv` (header row; path,label[,label...]) when present,
/// otherwise one subdirectory per class of .png/.ppm files. Classes sort
/// lexicographically; splits are stratified per class with a seeded shuffle.
/// Throws DatasetError listing every missing/unreadable file or empty class.
DatasetManifest load_dataset(const std::filesystem::path& root, const SplitRatios& ratios,
                             std::uint64_t seed);

/// Cache file for one (image, method) pair: `<stem>.<method>.plane`, where the
/// stem is the image path relative to the dataset root with separators
/// replaced by '_'.
std::filesystem::path target_path(const std::filesystem::path& cache_dir,
                                  const DatasetManifest& manifest, const Sample& sample,
                                  EnhanceMethod method);

struct TargetFailure {
    std::filesystem::path image;
    EnhanceMethod method;
    std::string message;
};

struct TargetReport {
    std::size_t computed = 0;
    std::size_t skipped = 0;
    std::size_t revalidated = 0;  // spot-checked cache hits
    std::size_t repaired = 0;     // spot checks that disagreed and were rewritten
    std::vector<TargetFailure> failures;
};

/// Computes and persists missing targets for every sample of every split.
/// A change of EnhanceParams invalidates the whole cache. About 5% of cache
/// hits are recomputed and compared bit-exactly.
TargetReport generate_targets(const DatasetManifest& manifest,
                              std::span<const EnhanceMethod> methods,
                              const EnhanceParams& params,
                              const std::filesystem::path& cache_dir);

struct AugmentConfig {
    std::size_t crop_extent = 64;
    bool enable_flips = true;
    double jitter_strength = 0.0;
};

/// One draw of the augmentation: crop position (0-3 corners, 4 centre),
/// horizontal flip, per-channel gain.
struct AugmentDraw {
    int position = 4;
    bool flip = false;
    std::array<double, 3> gain{1.0, 1.0, 1.0};
};

AugmentDraw draw_augment(const AugmentConfig& cfg, Rng& rng);
Plane apply_geometry(const Plane& p, const AugmentDraw& d, std::size_t extent);
ImageRGB apply_augment(const ImageRGB& img, const AugmentDraw& d, std::size_t extent);
ImageRGB augment(const ImageRGB& img, const AugmentConfig& cfg, Rng& rng);

struct SynthConfig {
    std::size_t class_count = 8;
    std::size_t per_class = 60;
    std::size_t extent = 96;
    std::uint64_t seed = 1;
    double blur_sigma = 1.0;
};

struct TextureOracleReport {
    double clean_accuracy = 0.0;
    double blurred_accuracy = 0.0;
    double sharpened_accuracy = 0.0;  // unsharp(radius 1, amount 2) on the blurred images
};

struct SynthResult {
    DatasetManifest manifest;
    TextureOracleReport oracle;
};

/// One synthetic image: stripes or cross-hatch (label % 4) in frequency band
/// label / 4, plus a coarse nuisance texture of a random family, over a smooth
/// coloured background. `clean` is before the blur.
struct SynthImage {
    ImageRGB clean;
    ImageRGB blurred;
};
SynthImage synth_texture_image(std::size_t label, const SynthConfig& cfg, Rng& rng);

/// Oriented gradient energy in two bands and four orientations, log-scaled
/// and mean-centred.
std::vector<double> oriented_energy(const Plane& y);

/// Writes `<out_dir>/<class>/<class>_NNN.png` plus manifest.csv and scores the
/// oriented-energy oracle on clean, blurred and re-sharpened images.
SynthResult synth_texture_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir,
                                  const SplitRatios& ratios = {});

}  // namespace dynenh

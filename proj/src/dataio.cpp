#include "dynenh/dataio.hpp"

#include "dynenh/image_io.hpp"
#include "dynenh/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace dynenh {

std::vector<std::size_t> Sample::all_labels() const {
    std::vector<std::size_t> out{label};
    for (std::size_t l : label_set)
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    return out;
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw std::invalid_argument("unknown split '" + std::string(name) + "' (train|val|test)");
}

const std::vector<Sample>& DatasetManifest::split(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Val: return val;
        case Split::Test: return test;
    }
    return test;
}

bool DatasetManifest::has_label_sets() const {
    for (const auto* part : {&train, &val, &test})
        for (const Sample& s : *part)
            if (!s.label_set.empty()) return true;
    return false;
}

namespace {

bool is_image(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ".png" || e == ".ppm";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back())))
            field.pop_back();
        std::size_t b = 0;
        while (b < field.size() && std::isspace(static_cast<unsigned char>(field[b]))) ++b;
        out.push_back(field.substr(b));
    }
    return out;
}

struct RawSample {
    fs::path path;
    std::vector<std::string> labels;
};

std::vector<RawSample> read_manifest_csv(const fs::path& root, std::vector<std::string>& errors) {
    std::ifstream in(root / "manifest.csv");
    std::string line;
    std::getline(in, line);  // header
    std::vector<RawSample> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() < 2) {
            errors.push_back("manifest.csv line " + std::to_string(lineno) + ": expected path,label");
            continue;
        }
        fs::path p = fields[0];
        if (p.is_relative()) p = root / p;
        if (!fs::exists(p)) errors.push_back("missing file: " + p.string());
        out.push_back({p, {fields.begin() + 1, fields.end()}});
    }
    return out;
}

std::vector<RawSample> scan_directories(const fs::path& root, std::vector<std::string>& errors) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<RawSample> out;
    for (const fs::path& d : dirs) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(d))
            if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) errors.push_back("empty class directory: " + d.string());
        for (const fs::path& f : files) out.push_back({f, {d.filename().string()}});
    }
    return out;
}

bool all_numeric(const std::vector<RawSample>& raw) {
    for (const RawSample& r : raw)
        for (const std::string& l : r.labels)
            if (l.empty() || !std::all_of(l.begin(), l.end(), [](unsigned char c) { return std::isdigit(c); }))
                return false;
    return true;
}

void shuffle(std::vector<Sample>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

DatasetManifest load_dataset(const fs::path& root, const SplitRatios& ratios, std::uint64_t seed) {
    if (!fs::is_directory(root)) throw DatasetError("dataset root is not a directory: " + root.string());
    std::vector<std::string> errors;
    const bool has_csv = fs::exists(root / "manifest.csv");
    std::vector<RawSample> raw = has_csv ? read_manifest_csv(root, errors) : scan_directories(root, errors);

    DatasetManifest m;
    m.root = fs::absolute(root);
    m.seed = seed;
    std::map<std::string, std::size_t> index;
    if (all_numeric(raw)) {
        std::size_t max_label = 0;
        for (const RawSample& r : raw)
            for (const std::string& l : r.labels) max_label = std::max<std::size_t>(max_label, std::stoul(l));
        for (std::size_t c = 0; c <= max_label; ++c) {
            m.class_names.push_back(std::to_string(c));
            index[std::to_string(c)] = c;
        }
    } else {
        std::set<std::string> names;
        for (const RawSample& r : raw) names.insert(r.labels.begin(), r.labels.end());
        m.class_names.assign(names.begin(), names.end());
        for (std::size_t c = 0; c < m.class_names.size(); ++c) index[m.class_names[c]] = c;
    }
    if (m.class_names.size() < 2) errors.push_back("dataset needs at least two classes");
    if (!errors.empty()) {
        std::string msg = "dataset " + root.string() + " rejected:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw DatasetError(msg);
    }

    std::vector<std::vector<Sample>> per_class(m.class_names.size());
    for (const RawSample& r : raw) {
        Sample s;
        s.path = fs::absolute(r.path);
        s.label = index.at(r.labels.front());
        for (std::size_t k = 1; k < r.labels.size(); ++k) s.label_set.push_back(index.at(r.labels[k]));
        if (!s.label_set.empty()) s.label_set.insert(s.label_set.begin(), s.label);
        per_class[s.label].push_back(std::move(s));
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        auto& v = per_class[c];
        if (v.empty()) throw DatasetError("class '" + m.class_names[c] + "' has no samples");
        std::sort(v.begin(), v.end(), [](const Sample& a, const Sample& b) { return a.path < b.path; });
        Rng rng(seed * 0x9e3779b97f4a7c15ULL + c);
        shuffle(v, rng);
        const double n = static_cast<double>(v.size());
        const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ratios.train * n)));
        const std::size_t n_val = std::min(v.size() - std::min(v.size(), n_train),
                                           static_cast<std::size_t>(std::lround(ratios.val * n)));
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto& dst = i < n_train ? m.train : (i < n_train + n_val ? m.val : m.test);
            dst.push_back(v[i]);
        }
    }
    return m;
}

fs::path target_path(const fs::path& cache_dir, const DatasetManifest& manifest,
                     const Sample& sample, EnhanceMethod method) {
    fs::path rel = sample.path.lexically_relative(manifest.root);
    if (rel.empty() || *rel.begin() == "..") rel = sample.path.filename();
    rel.replace_extension();
    std::string stem = rel.generic_string();
    std::replace(stem.begin(), stem.end(), '/', '_');
    return cache_dir / (stem + "." + std::string(method_name(method)) + ".plane");
}

namespace {

std::string params_fingerprint(const EnhanceParams& p) {
    std::ostringstream os;
    os.precision(17);
    os << "wls_lambda=" << p.wls_lambda << "\nwls_alpha=" << p.wls_alpha << "\nwls_eps=" << p.wls_eps
       << "\ndetail_boost_c=" << p.detail_boost_c << "\nbf_sigma_spatial_frac=" << p.bf_sigma_spatial_frac
       << "\nbf_sigma_range_frac=" << p.bf_sigma_range_frac << "\ngf_radius_frac=" << p.gf_radius_frac
       << "\ngf_eps_frac=" << p.gf_eps_frac << "\nsharp_amount=" << p.sharp_amount
       << "\nsharp_radius=" << p.sharp_radius << '\n';
    return os.str();
}

struct TargetJob {
    const Sample* sample;
    EnhanceMethod method;
    fs::path out;
};

enum class JobOutcome { Computed, Skipped, Revalidated, Repaired, Failed };

}  // namespace

TargetReport generate_targets(const DatasetManifest& manifest, std::span<const EnhanceMethod> methods,
                              const EnhanceParams& params, const fs::path& cache_dir) {
    fs::create_directories(cache_dir);
    const fs::path stamp = cache_dir / "params.txt";
    const std::string fingerprint = params_fingerprint(params);
    bool params_fresh = false;
    if (std::ifstream in{stamp}) {
        std::stringstream ss;
        ss << in.rdbuf();
        params_fresh = ss.str() == fingerprint;
    }

    std::vector<TargetJob> jobs;
    for (const auto* part : {&manifest.train, &manifest.val, &manifest.test})
        for (const Sample& s : *part)
            for (EnhanceMethod m : methods) jobs.push_back({&s, m, target_path(cache_dir, manifest, s, m)});

    std::vector<JobOutcome> outcome(jobs.size(), JobOutcome::Skipped);
    std::vector<std::string> messages(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::thread_count())
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const TargetJob& job = jobs[i];
        try {
            const bool fresh = params_fresh && fs::exists(job.out) &&
                               fs::last_write_time(job.out) >= fs::last_write_time(job.sample->path);
            const bool spot_check = fresh && (i * 2654435761ULL) % 20 == 0;
            if (fresh && !spot_check) continue;
            const Plane y = luminance(read_image(job.sample->path));
            const Plane t = make_target(job.method, y, params);
            if (spot_check) {
                if (read_plane(job.out) == t) {
                    outcome[i] = JobOutcome::Revalidated;
                    continue;
                }
                write_plane(job.out, t);
                outcome[i] = JobOutcome::Repaired;
                continue;
            }
            write_plane(job.out, t);
            outcome[i] = JobOutcome::Computed;
        } catch (const std::exception& e) {
            outcome[i] = JobOutcome::Failed;
            messages[i] = e.what();
        }
    }

    TargetReport rep;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        switch (outcome[i]) {
            case JobOutcome::Computed: ++rep.computed; break;
            case JobOutcome::Skipped: ++rep.skipped; break;
            case JobOutcome::Revalidated: ++rep.skipped; ++rep.revalidated; break;
            case JobOutcome::Repaired: ++rep.computed; ++rep.repaired; break;
            case JobOutcome::Failed:
                rep.failures.push_back({jobs[i].sample->path, jobs[i].method, messages[i]});
                break;
        }
    }
    std::ofstream(stamp) << fingerprint;
    return rep;
}

AugmentDraw draw_augment(const AugmentConfig& cfg, Rng& rng) {
    AugmentDraw d;
    d.position = static_cast<int>(rng.below(5));
    const bool flip = rng.below(2) == 1;
    d.flip = cfg.enable_flips && flip;
    for (double& g : d.gain) {
        const double u = rng.uniform(-1.0, 1.0);
        g = 1.0 + cfg.jitter_strength * u;
    }
    return d;
}

namespace {
std::pair<std::size_t, std::size_t> crop_origin(int position, std::size_t h, std::size_t w, std::size_t e) {
    switch (position) {
        case 0: return {0, 0};
        case 1: return {0, w - e};
        case 2: return {h - e, 0};
        case 3: return {h - e, w - e};
        default: return {(h - e) / 2, (w - e) / 2};
    }
}
}  // namespace

Plane apply_geometry(const Plane& p, const AugmentDraw& d, std::size_t extent) {
    if (extent > p.height() || extent > p.width())
        throw DimensionError("augment: crop extent exceeds image");
    const auto [top, left] = crop_origin(d.position, p.height(), p.width(), extent);
    Plane out = crop(p, top, left, extent, extent);
    return d.flip ? flip_horizontal(out) : out;
}

ImageRGB apply_augment(const ImageRGB& img, const AugmentDraw& d, std::size_t extent) {
    ImageRGB out(apply_geometry(img.r, d, extent), apply_geometry(img.g, d, extent),
                 apply_geometry(img.b, d, extent));
    for (int c = 0; c < 3; ++c)
        if (d.gain[c] != 1.0)
            for (double& v : out.channel(c).values()) v = std::clamp(v * d.gain[c], 0.0, 1.0);
    return out;
}

ImageRGB augment(const ImageRGB& img, const AugmentConfig& cfg, Rng& rng) {
    return apply_augment(img, draw_augment(cfg, rng), cfg.crop_extent);
}

// ---------------------------------------------------------------------------
// Synthetic texture corpus

namespace {

constexpr std::array<double, 4> kOrientations = {0.0, 45.0, 90.0, 135.0};

// Texture families, chosen so a horizontal flip keeps the class: horizontal
// stripes, vertical stripes, steep and shallow cross-hatch. The hatch pairs are
// not orthogonal; an orthogonal pair has isotropic oriented energy.
const std::array<std::vector<double>, 4> kPatterns = {std::vector<double>{90.0}, {0.0}, {60.0, 120.0},
                                                      {30.0, 150.0}};

// Class textures sit where a sigma-1 blur removes most of their energy and
// unsharp masking restores it; the shared nuisance texture is coarse enough
// to pass the blur almost untouched.
constexpr double kNuisanceFrequency = 0.07;

double class_frequency(std::size_t label, std::size_t class_count) {
    const std::size_t bands = (class_count + 3) / 4;
    const std::size_t band = label / 4;
    if (bands == 1) return 0.20;
    return 0.17 + 0.06 * static_cast<double>(band) / static_cast<double>(bands - 1);
}

}  // namespace

SynthImage synth_texture_image(std::size_t label, const SynthConfig& cfg, Rng& rng) {
    const std::size_t n = cfg.extent;
    const std::vector<double>& pattern = kPatterns[label % 4];
    const double f0 = class_frequency(label, cfg.class_count);

    struct Grating {
        double fx, fy, phase, amp;
    };
    std::vector<Grating> texture, nuisance, background;
    constexpr int kTexture = 6;
    auto add_gratings = [&](std::vector<Grating>& out, const std::vector<double>& angles, double freq) {
        for (int m = 0; m < kTexture; ++m) {
            const double th = (angles[static_cast<std::size_t>(m) % angles.size()] + 10.0 * rng.normal()) *
                              std::numbers::pi / 180.0;
            const double f = freq * (1.0 + 0.08 * rng.normal());
            out.push_back({f * std::cos(th), f * std::sin(th), rng.uniform(0, 2 * std::numbers::pi),
                           1.0 / std::sqrt(static_cast<double>(kTexture))});
        }
    };
    add_gratings(texture, pattern, f0);
    // same families as the classes, drawn independently of the label
    const auto family = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform(0, 4)), 3);
    add_gratings(nuisance, kPatterns[family], kNuisanceFrequency);
    for (int m = 0; m < 3; ++m) {
        const double th = rng.uniform(0, std::numbers::pi);
        const double f = rng.uniform(0.004, 0.02);
        background.push_back({f * std::cos(th), f * std::sin(th), rng.uniform(0, 2 * std::numbers::pi), 1.0});
    }
    std::array<double, 3> tint_a{}, tint_b{};
    for (int c = 0; c < 3; ++c) {
        tint_a[c] = rng.uniform(0.25, 0.75);
        tint_b[c] = rng.uniform(0.25, 0.75);
    }
    const double tex_contrast = rng.uniform(0.10, 0.16);

    SynthImage out{ImageRGB(n, n), ImageRGB(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = static_cast<double>(j), y = static_cast<double>(i);
            double t = 0.0, bg = 0.0;
            for (const Grating& g : texture)
                t += g.amp * std::cos(2 * std::numbers::pi * (g.fx * x + g.fy * y) + g.phase);
            for (const Grating& g : nuisance)
                t += g.amp * std::cos(2 * std::numbers::pi * (g.fx * x + g.fy * y) + g.phase);
            for (const Grating& g : background)
                bg += std::cos(2 * std::numbers::pi * (g.fx * x + g.fy * y) + g.phase) / 3.0;
            const double mix = 0.5 + 0.5 * bg;
            for (int c = 0; c < 3; ++c) {
                const double base = tint_a[c] * mix + tint_b[c] * (1.0 - mix);
                out.clean.channel(c)(i, j) = std::clamp(base + tex_contrast * t, 0.0, 1.0);
            }
        }
    for (int c = 0; c < 3; ++c) {
        Plane blurred = gaussian_blur(out.clean.channel(c), cfg.blur_sigma);
        for (double& v : blurred.values()) v = std::clamp(v + 0.004 * rng.normal(), 0.0, 1.0);
        out.blurred.channel(c) = std::move(blurred);
    }
    return out;
}

std::vector<double> oriented_energy(const Plane& y) {
    const Plane g1 = gaussian_blur(y, 1.0);
    const Plane g3 = gaussian_blur(y, 3.0);
    std::vector<double> feat;
    for (int band = 0; band < 2; ++band) {
        Plane b(y.height(), y.width());
        for (std::size_t k = 0; k < y.size(); ++k)
            b.values()[k] = band == 0 ? y.values()[k] - g1.values()[k] : g1.values()[k] - g3.values()[k];
        for (double deg : kOrientations) {
            const double c = std::cos(deg * std::numbers::pi / 180.0);
            const double s = std::sin(deg * std::numbers::pi / 180.0);
            double e = 0.0;
            for (std::size_t i = 1; i + 1 < y.height(); ++i)
                for (std::size_t j = 1; j + 1 < y.width(); ++j) {
                    const double gx = 0.5 * (b(i, j + 1) - b(i, j - 1));
                    const double gy = 0.5 * (b(i + 1, j) - b(i - 1, j));
                    const double d = c * gx + s * gy;
                    e += d * d;
                }
            feat.push_back(std::log(e + 1e-12));
        }
    }
    double m = 0.0;
    for (double v : feat) m += v;
    m /= static_cast<double>(feat.size());
    for (double& v : feat) v -= m;
    return feat;
}

namespace {

double prototype_accuracy(const std::vector<std::vector<double>>& protos,
                          const std::vector<std::vector<double>>& feats,
                          const std::vector<std::size_t>& labels) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < protos.size(); ++c) {
            double d = 0.0;
            for (std::size_t k = 0; k < feats[i].size(); ++k)
                d += (feats[i][k] - protos[c][k]) * (feats[i][k] - protos[c][k]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        correct += best == labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(feats.size());
}

}  // namespace

SynthResult synth_texture_dataset(const SynthConfig& cfg, const fs::path& out_dir,
                                  const SplitRatios& ratios) {
    if (cfg.class_count < 2) throw std::invalid_argument("synth_texture_dataset: need >= 2 classes");
    fs::create_directories(out_dir);
    const int digits = cfg.class_count > 9 ? 2 : 1;
    auto class_name = [&](std::size_t c) {
        std::string s = std::to_string(c);
        return "class" + std::string(static_cast<std::size_t>(digits) - std::min<std::size_t>(s.size(), digits), '0') + s;
    };

    std::vector<std::vector<double>> clean_f, blur_f, sharp_f;
    std::vector<std::size_t> labels;
    std::ofstream manifest(out_dir / "manifest.csv");
    manifest << "path,label\n";
    for (std::size_t c = 0; c < cfg.class_count; ++c) {
        fs::create_directories(out_dir / class_name(c));
        Rng rng(cfg.seed * 1000003ULL + c * 7919ULL + 17);
        for (std::size_t i = 0; i < cfg.per_class; ++i) {
            const SynthImage img = synth_texture_image(c, cfg, rng);
            char buf[32];
            std::snprintf(buf, sizeof buf, "_%03zu.png", i);
            const std::string rel = class_name(c) + "/" + class_name(c) + buf;
            write_image(out_dir / rel, img.blurred);
            manifest << rel << ',' << class_name(c) << '\n';
            const Plane yb = luminance(img.blurred);
            clean_f.push_back(oriented_energy(luminance(img.clean)));
            blur_f.push_back(oriented_energy(yb));
            sharp_f.push_back(oriented_energy(unsharp(yb, 1.0, 2.0)));
            labels.push_back(c);
        }
    }
    manifest.close();

    std::vector<std::vector<double>> protos(cfg.class_count, std::vector<double>(clean_f.front().size(), 0.0));
    for (std::size_t i = 0; i < clean_f.size(); ++i)
        for (std::size_t k = 0; k < clean_f[i].size(); ++k)
            protos[labels[i]][k] += clean_f[i][k] / static_cast<double>(cfg.per_class);

    SynthResult res;
    res.oracle.clean_accuracy = prototype_accuracy(protos, clean_f, labels);
    res.oracle.blurred_accuracy = prototype_accuracy(protos, blur_f, labels);
    res.oracle.sharpened_accuracy = prototype_accuracy(protos, sharp_f, labels);
    res.manifest = load_dataset(out_dir, ratios, cfg.seed);
    return res;
}

}  // namespace dynenh

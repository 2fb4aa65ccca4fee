// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance --work DIR [--criteria 1,2,...]
//
// Corpora, target caches and run directories are created under DIR and
// reused by later invocations.

#include "helpers.hpp"
#include "oracles.hpp"

#include "dynenh/cli.hpp"
#include "dynenh/gradcheck.hpp"
#include "dynenh/image_io.hpp"
#include "dynenh/kernels.hpp"
#include "dynenh/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace dynenh;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- shared corpora ----------------------------------------------------------

// Blurred synthetic textures, 8 classes; shared by the training criteria.
struct Corpus {
    fs::path root;
    fs::path cache;
    DatasetManifest manifest;
};

Corpus ensure_corpus(const fs::path& work, const std::string& name, SynthConfig sc, const SplitRatios& ratios) {
    Corpus c;
    c.root = work / name;
    c.cache = c.root / ".targets";
    if (!fs::exists(c.root / "manifest.csv")) {
        fs::remove_all(c.root);
        std::cerr << "[acceptance] writing corpus " << c.root << '\n';
        synth_texture_dataset(sc, c.root, ratios);
    }
    c.manifest = load_dataset(c.root, ratios, 1);
    const TargetReport rep = generate_targets(c.manifest, kAllMethods, EnhanceParams{}, c.cache);
    if (!rep.failures.empty()) throw std::runtime_error("target generation failed for " + rep.failures.front().image.string());
    return c;
}

SynthConfig main_synth() {
    SynthConfig sc;
    sc.class_count = 8;
    sc.per_class = 60;
    sc.extent = 72;
    sc.seed = 1;
    sc.blur_sigma = 1.0;
    return sc;
}

Corpus main_corpus(const fs::path& work) { return ensure_corpus(work, "textures", main_synth(), {}); }

// Training settings shared by the directional experiments.
RunConfig base_config(const Corpus& c) {
    RunConfig cfg;
    cfg.data_dir = c.root;
    cfg.cache_dir = c.cache;
    cfg.input_extent = 64;
    cfg.augment.crop_extent = 64;
    return cfg;
}

// Runs the CLI in-process with its console output appended to a log file.
int run_cli(const fs::path& log, std::vector<std::string> args) {
    args.insert(args.begin(), "dynenh");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ofstream out(log, std::ios::app);
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(out.rdbuf());
    const int status = cli::run(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return status;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::set<fs::path> subdirs(const fs::path& root) {
    std::set<fs::path> out;
    if (fs::exists(root))
        for (const auto& e : fs::directory_iterator(root))
            if (e.is_directory()) out.insert(e.path());
    return out;
}

double metric(const Evaluation& ev, const std::string& stream, const std::string& name) {
    for (const MetricRow& r : ev.rows)
        if (r.stream == stream && r.metric == name) return r.value;
    throw std::runtime_error("no metric " + stream + "/" + name);
}

// --- 1 ---------------------------------------------------------------------------

Verdict gradient_suite(const fs::path&) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<GradcheckRow> rows = run_gradcheck(3, 100);
    const double secs = seconds_since(t0);
    double worst = 0.0;
    std::string worst_name;
    bool all_checked = true;
    for (const GradcheckRow& r : rows) {
        all_checked = all_checked && r.checked >= 100;
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            worst_name = r.name;
        }
    }
    return {worst < 1e-4 && all_checked && secs < 60.0,
            std::to_string(rows.size()) + " checks x 100 coords, worst " + worst_name + " " + fmt(worst, 3) +
                ", " + fmt(secs, 3) + " s"};
}

// --- 2 ---------------------------------------------------------------------------

Verdict filter_oracles(const fs::path&) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2);
    const Plane y = testutil::random_plane(32, 32, rng, 0.05, 0.95);
    const EnhanceParams p;
    const WlsResult wls = wls_solve(y, p.wls_lambda, p.wls_alpha, p.wls_eps);
    const auto dense = oracle::dense_wls_matrix(y, p.wls_lambda, p.wls_alpha, p.wls_eps);
    const auto au = oracle::dense_apply(dense, wls.smoothed.values());
    double resid = 0.0;
    for (std::size_t k = 0; k < au.size(); ++k) resid = std::max(resid, std::abs(au[k] - y.values()[k]));
    const auto direct = oracle::dense_solve(dense, {y.values().begin(), y.values().end()});
    const double vs_direct = testutil::max_abs_diff(wls.smoothed, Plane(32, 32, direct));

    double guided_err = 0.0;
    for (std::size_t r : {1u, 2u, 3u}) {
        const Plane a = testutil::random_plane(16, 16, rng), g = testutil::random_plane(16, 16, rng);
        guided_err = std::max(guided_err, testutil::max_abs_diff(guided(a, a, r, 0.01),
                                                                 oracle::naive_guided(a, a, static_cast<long>(r), 0.01)));
        guided_err = std::max(guided_err, testutil::max_abs_diff(guided(a, g, r, 1e-3),
                                                                 oracle::naive_guided(a, g, static_cast<long>(r), 1e-3)));
    }

    double box_err = 0.0;
    const int box_cases = 120;
    for (int c = 0; c < box_cases; ++c) {
        const Plane q = testutil::random_plane(1 + rng.below(30), 1 + rng.below(30), rng, -1, 1);
        const std::size_t radius = rng.below(8);
        box_err = std::max(box_err, testutil::max_abs_diff(box_filter(q, radius), oracle::naive_box(q, radius)));
    }
    const double secs = seconds_since(t0);
    return {resid < 1e-6 && vs_direct < 1e-6 && guided_err < 1e-8 && box_err < 1e-10 && secs < 60.0,
            "WLS residual " + fmt(resid, 3) + " (vs direct " + fmt(vs_direct, 3) + "), guided " + fmt(guided_err, 3) +
                ", box " + fmt(box_err, 3) + " over " + std::to_string(box_cases) + " cases, " + fmt(secs, 3) + " s"};
}

// --- 3 ---------------------------------------------------------------------------

Verdict identity_init(const fs::path& work) {
    const Corpus c = main_corpus(work);
    const RunConfig cfg = base_config(c);
    const Trainer t(cfg, c.manifest.class_count());
    const NetParams cls = t.init_classnet();
    std::size_t images = 0, exact = 0;
    double worst_mse_diff = 0.0;
    const AugmentDraw centre;
    for (Split sp : {Split::Train, Split::Val, Split::Test}) {
        const auto samples = load_samples(c.manifest, sp, c.cache, kAllMethods);
        for (const LoadedSample& s : samples) {
            ++images;
            const Plane y = luminance(s.image);
            bool same = true;
            for (EnhanceMethod m : kAllMethods) {
                const NetParams enh = t.init_enhance(m);
                same = same && apply_filter(y, t.enhance_net().generate_filter(enh, y).filter) == y;
                const ImageRGB crop = apply_augment(s.image, centre, cfg.input_extent);
                const Plane tc = apply_geometry(s.targets[static_cast<std::size_t>(m)], centre, cfg.input_extent);
                const double got = t.a1_sample(enh, cls, crop, tc, s.label, nullptr, nullptr).mse;
                const double want = mse(luminance(crop), tc);
                worst_mse_diff = std::max(worst_mse_diff, std::abs(got - want) / std::max(want, 1e-300));
            }
            exact += same;
        }
    }
    return {exact == images && worst_mse_diff <= 1e-15,
            std::to_string(exact) + "/" + std::to_string(images) + " images with Y' == Y for all 5 nets; A1 MSE rel. diff " +
                fmt(worst_mse_diff, 3)};
}

// --- 4 ---------------------------------------------------------------------------

Verdict a1_learning(const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();
    // 200 images: 8 classes x 25
    SynthConfig sc = main_synth();
    sc.per_class = 25;
    sc.seed = 4;
    const Corpus c = ensure_corpus(work, "a1_textures", sc, {});
    RunConfig cfg = base_config(c);
    cfg.approach = Approach::A1;
    cfg.method = EnhanceMethod::Imsharp;
    cfg.epochs = 30;
    cfg.seed = 7;
    const auto train = load_samples(c.manifest, Split::Train, c.cache, kAllMethods);
    const auto test = load_samples(c.manifest, Split::Test, c.cache, kAllMethods);
    Trainer t(cfg, c.manifest.class_count());
    const RunResult res = run_training(t, train, {});
    const Evaluation ev = evaluate(t, res.models, test, false);
    const double gain = metric(ev, "imsharp", "psnr_gain_db");
    const double secs = seconds_since(t0);
    return {gain >= 3.0 && secs <= 600.0,
            "held-out PSNR gain " + fmt(gain) + " dB (PSNR(Y',T) " + fmt(metric(ev, "imsharp", "psnr_db")) + " dB) on " +
                std::to_string(test.size()) + " test images, " + fmt(secs, 3) + " s"};
}

// --- 5 ---------------------------------------------------------------------------

Verdict weighting(const fs::path&) {
    Rng rng(5);
    std::size_t bad = 0;
    double worst_sum = 0.0, worst_oracle = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> mse(5);
        for (double& v : mse) v = rng.uniform(1e-4, 0.1);
        const auto w = compute_weights_from_mse(mse).weights.w;
        const auto o = oracle::weights_from_mse(mse);
        double s = 0.0;
        for (std::size_t a = 0; a < 5; ++a) {
            s += w[a];
            bad += !(w[a] > 0.0);
            worst_oracle = std::max(worst_oracle, std::abs(w[a] - o[a]));
            for (std::size_t b = 0; b < 5; ++b) bad += mse[a] < mse[b] && w[a] < w[b];
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
    const std::vector<double> fixture = {2, 1, 4, 8, 5};
    const auto got = compute_weights_from_mse(fixture).weights.w;
    const auto want = oracle::weights_from_mse(fixture);
    const std::vector<double> listed = {0.29032, 0.35484, 0.16129, 0.09677, 0.09677};
    double fix_err = 0.0, listed_err = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
        fix_err = std::max(fix_err, std::abs(got[k] - want[k]));
        listed_err = std::max(listed_err, std::abs(got[k] - listed[k]));
    }
    return {bad == 0 && worst_sum < 1e-9 && worst_oracle < 1e-12 && fix_err < 1e-5 && listed_err < 1e-5,
            "1000 vectors: " + std::to_string(bad) + " violations, |sum-1| <= " + fmt(worst_sum, 3) +
                "; fixture error " + fmt(fix_err, 3) + " (oracle), " + fmt(listed_err, 3) + " (5-digit vector)"};
}

// --- 6 ---------------------------------------------------------------------------

Verdict stat_decomposition(const fs::path& work) {
    const Corpus c = main_corpus(work);
    RunConfig cfg = base_config(c);
    cfg.approach = Approach::A2;
    cfg.seed = 6;
    auto train = load_samples(c.manifest, Split::Train, c.cache, kAllMethods);
    train.resize(std::min<std::size_t>(train.size(), 48));
    Trainer t(cfg, c.manifest.class_count());

    // Bank from one short A1 run per method.
    std::vector<NetParams> per_method;
    for (EnhanceMethod m : kAllMethods)
        per_method.push_back(t.train_approach1(train, {}, m, t.init_classnet(), 1, "bank").enhance);
    const StaticFilterBank bank = t.derive_static_filters(per_method, train);
    const StreamWeights w = t.static_weights(bank, train);

    std::size_t batches = 0;
    double worst = 0.0;
    t.set_batch_hook([&](const BatchTrace& b) {
        ++batches;
        double sum = 0.0;
        for (std::size_t i = 0; i < b.inputs.size(); ++i) {
            double per = 0.0;
            for (std::size_t k = 0; k < bank.filters.size(); ++k) {
                const ForwardResult fr = t.class_net().forward(b.class_params, enhance_rgb(b.inputs[i], bank.filters[k]));
                const std::vector<double> p = softmax(fr.output.values());
                per += w.at(k) * -std::log(p[b.labels[i]]);
            }
            sum += per;
        }
        const double mean = sum / static_cast<double>(b.inputs.size());
        worst = std::max(worst, std::abs(mean - b.loss));
    });
    t.train_stat(train, {}, bank, w, t.init_classnet(), 2);
    const std::size_t expected = 2 * ((train.size() + cfg.batch_size - 1) / cfg.batch_size);
    return {batches == expected && worst <= 1e-12,
            std::to_string(batches) + " batches over 2 epochs, max |Loss_Stat - sum W_k L_k| = " + fmt(worst, 3)};
}

// --- 7 ---------------------------------------------------------------------------

Verdict degenerate_equivalence(const fs::path& work) {
    const Corpus c = main_corpus(work);
    RunConfig cfg = base_config(c);
    cfg.seed = 8;
    const auto train = load_samples(c.manifest, Split::Train, c.cache, {});
    const auto test = load_samples(c.manifest, Split::Test, c.cache, {});
    Trainer t(cfg, c.manifest.class_count());
    TrainedModels m;
    m.approach = Approach::A2;
    m.methods.assign(kAllMethods.begin(), kAllMethods.end());
    m.classnet = t.train_rgb(train, {}, t.init_classnet(), 3, false, "fc").classnet;
    StaticFilterBank bank;
    for (std::size_t k = 0; k <= kMethodCount; ++k) bank.filters.push_back(DynamicFilter::identity(cfg.filter_size));
    m.bank = bank;
    m.weights = equal_weights(kMethodCount);
    const Evaluation ev = evaluate(t, m, test, false);
    const double fused = metric(ev, "fused", "accuracy"), rgb = metric(ev, "rgb", "accuracy");
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < test.size(); ++i) disagree += ev.fused[i].argmax() != ev.per_stream.back()[i].argmax();
    return {fused == rgb && disagree == 0,
            "fused " + fmt(fused) + " vs rgb " + fmt(rgb) + " on " + std::to_string(test.size()) + " test images, " +
                std::to_string(disagree) + " argmax disagreements"};
}

// --- 8 ---------------------------------------------------------------------------

// Per-seed protocol: RGB pretraining, then FC fine-tuning, Stat-CNN and
// Dyn-CNN from the same pretrained ClassNet.
struct GainSettings {
    std::size_t pretrain = 15;
    std::size_t epochs = 10;
    std::size_t bank_epochs = 2;
};

Verdict classification_gain(const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();
    const Corpus c = main_corpus(work);
    const GainSettings gs;
    const auto train = load_samples(c.manifest, Split::Train, c.cache, kAllMethods);
    const auto val = load_samples(c.manifest, Split::Val, c.cache, kAllMethods);
    const auto test = load_samples(c.manifest, Split::Test, c.cache, kAllMethods);

    std::vector<double> fc, a2, a3;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto config_for = [&](Approach a) {
            RunConfig cfg = base_config(c);
            cfg.approach = a;
            cfg.seed = seed;
            cfg.pretrain_epochs = gs.pretrain;
            cfg.epochs = gs.epochs;
            cfg.bank_epochs = gs.bank_epochs;
            return cfg;
        };
        // phase 1 does not depend on the approach, so all three share it
        const NetParams pretrained =
            pretrain_classnet(Trainer(config_for(Approach::FC), c.manifest.class_count()), train, val).classnet;
        auto accuracy_of = [&](Approach a) {
            const Trainer t(config_for(a), c.manifest.class_count());
            const RunResult r = run_phase2(t, train, val, pretrained);
            const Evaluation ev = evaluate(t, r.models, test, false);
            return metric(ev, a == Approach::FC ? "rgb" : "fused", "accuracy");
        };
        fc.push_back(accuracy_of(Approach::FC));
        a2.push_back(accuracy_of(Approach::A2));
        a3.push_back(accuracy_of(Approach::A3));
        std::cerr << "[acceptance] seed " << seed << ": fc " << fc.back() << ", a2 " << a2.back() << ", a3 " << a3.back()
                  << " (" << fmt(seconds_since(t0), 4) << " s)\n";
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double m_fc = median(fc), m_a2 = median(a2), m_a3 = median(a3);
    const double secs = seconds_since(t0);
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : " ") + fmt(100 * x, 3);
        return s;
    };
    return {m_a3 >= m_fc + 0.02 && m_a2 >= m_fc && secs <= 45 * 60,
            "median test accuracy fc " + fmt(100 * m_fc) + "%, a2 " + fmt(100 * m_a2) + "%, a3 " + fmt(100 * m_a3) +
                "% [fc " + list(fc) + " | a2 " + list(a2) + " | a3 " + list(a3) + "], " + fmt(secs / 60, 3) + " min"};
}

// --- 9 ---------------------------------------------------------------------------

Verdict static_distillation(const fs::path& work) {
    SynthConfig sc = main_synth();
    sc.class_count = 2;
    sc.per_class = 5;
    sc.seed = 9;
    const SplitRatios all_train{1.0, 0.0, 0.0};
    const Corpus c = ensure_corpus(work, "distill10", sc, all_train);
    const fs::path runs = work / "runs_distill", log = work / "distill.log";
    fs::remove_all(runs);
    const std::vector<std::string> common = {"--data", c.root.string(), "--cache", c.cache.string(),
                                             "--set", "split_train=1", "--set", "split_val=0", "--set", "split_test=0"};
    auto args = [&](std::vector<std::string> head) {
        head.insert(head.end(), common.begin(), common.end());
        return head;
    };
    if (run_cli(log, args({"train", "--runs", runs.string(), "--approach", "a3", "--epochs", "1", "--batch-size", "5",
                           "--seed", "9"})) != 0)
        return {false, "train failed, see " + log.string()};
    const fs::path rd = *subdirs(runs).begin();
    if (run_cli(log, {"export-filters", rd.string(), "--split", "train"}) != 0)
        return {false, "export-filters failed, see " + log.string()};

    RunConfig cfg = RunConfig::from_key_values(KeyValues::load(rd / "config.txt"));
    Trainer t(cfg, c.manifest.class_count());
    const TrainedModels models = load_models(rd, t);
    const auto train = load_samples(c.manifest, Split::Train, c.cache, {});
    const StaticFilterBank bank = t.derive_static_filters(models.enhance, train);

    double worst = 0.0;
    std::size_t files = 0;
    for (std::size_t k = 0; k < kMethodCount; ++k) {
        const std::string suffix = "." + std::string(method_name(kAllMethods[k])) + ".plane";
        Plane mean(cfg.filter_size, cfg.filter_size);
        std::size_t n = 0;
        for (const auto& e : fs::directory_iterator(rd / "filters")) {
            const std::string name = e.path().filename().string();
            if (!name.ends_with(suffix)) continue;
            const Plane f = read_plane(e.path());
            for (std::size_t q = 0; q < f.size(); ++q) mean.values()[q] += f.values()[q];
            ++n;
        }
        files += n;
        for (double& v : mean.values()) v /= static_cast<double>(n);
        worst = std::max(worst, testutil::max_abs_diff(mean, bank.filters[k].taps));
    }
    return {files == 10 * kMethodCount && train.size() == 10 && worst <= 1e-12,
            std::to_string(files) + " exported filters from " + std::to_string(train.size()) +
                " images, max |mean - derived| = " + fmt(worst, 3)};
}

// --- 10 --------------------------------------------------------------------------

Verdict determinism(const fs::path& work) {
    SynthConfig sc = main_synth();
    sc.per_class = 8;
    sc.seed = 10;
    const Corpus c = ensure_corpus(work, "determinism", sc, {});
    const fs::path log = work / "determinism.log";
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path runs = work / ("runs_determinism_" + std::to_string(rep));
        fs::remove_all(runs);
        if (run_cli(log, {"train", "--runs", runs.string(), "--data", c.root.string(), "--cache", c.cache.string(),
                          "--approach", "a3", "--pretrain-epochs", "1", "--epochs", "1", "--batch-size", "4",
                          "--seed", "10"}) != 0)
            return {false, "train failed, see " + log.string()};
        const fs::path rd = *subdirs(runs).begin();
        if (run_cli(log, {"eval", rd.string(), "--split", "test"}) != 0) return {false, "eval failed, see " + log.string()};
        dirs.push_back(rd);
    }
    const bool same_log = slurp(dirs[0] / "log.csv") == slurp(dirs[1] / "log.csv");
    const bool same_summary = slurp(dirs[0] / "summary.csv") == slurp(dirs[1] / "summary.csv");
    return {same_log && same_summary && !slurp(dirs[0] / "summary.csv").empty(),
            std::string("log.csv ") + (same_log ? "identical" : "DIFFERS") + ", summary.csv " +
                (same_summary ? "identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynenh acceptance suite"};
    fs::path work = "acceptance_work";
    std::string criteria = "1,2,3,4,5,6,7,8,9,10";
    app.add_option("--work", work, "scratch directory");
    app.add_option("--criteria", criteria, "comma-separated criterion numbers");
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::pair<std::string, std::function<Verdict(const fs::path&)>>> table = {
        {1, {"gradient suite", gradient_suite}},
        {2, {"filter oracles", filter_oracles}},
        {3, {"identity initialisation", identity_init}},
        {4, {"A1 learns Imsharp", a1_learning}},
        {5, {"MSE weighting", weighting}},
        {6, {"Stat-CNN loss decomposition", stat_decomposition}},
        {7, {"degenerate pipeline equivalence", degenerate_equivalence}},
        {8, {"directional classification gain", classification_gain}},
        {9, {"static-filter distillation", static_distillation}},
        {10, {"determinism", determinism}},
    };

    fs::create_directories(work);
    work = fs::absolute(work);
    bool all = true;
    std::stringstream list(criteria);
    for (std::string item; std::getline(list, item, ',');) {
        const int id = std::stoi(item);
        const auto it = table.find(id);
        if (it == table.end()) {
            std::cerr << "unknown criterion " << item << '\n';
            return 1;
        }
        Verdict v;
        try {
            v = it->second.second(work);
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        all = all && v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << it->second.first << ": " << v.detail << std::endl;
    }
    return all ? 0 : 1;
}

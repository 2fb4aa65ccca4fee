#include "dynenh/cli.hpp"

#include "dynenh/gradcheck.hpp"
#include "dynenh/image_io.hpp"
#include "dynenh/kernels.hpp"
#include "dynenh/pipeline.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace dynenh::cli {

// ---------------------------------------------------------------------------
// run directories, locks, hashes

fs::path create_run_dir(const fs::path& root, std::string_view tag) {
    fs::create_directories(root);
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    const std::string base = std::string(stamp) + "-" + std::string(tag);
    for (int n = 1;; ++n) {
        const fs::path dir = root / (n == 1 ? base : base + "-" + std::to_string(n));
        if (fs::create_directory(dir)) return dir;
    }
}

DirLock::DirLock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw std::runtime_error("run directory " + dir.string() + " is locked by another process (" +
                                 path_.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

DirLock::~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

namespace {

std::string sha1_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha1(), nullptr) != 1)
        throw std::runtime_error("SHA-1 digest failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return out.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string git_blob_sha1(std::string_view bytes) {
    std::string obj = "blob " + std::to_string(bytes.size());
    obj.push_back('\0');
    obj.append(bytes);
    return sha1_hex(obj);
}

std::string inputs_hash(const DatasetManifest& manifest, const std::string& config_text) {
    std::vector<std::pair<std::string, std::string>> entries;
    for (Split s : {Split::Train, Split::Val, Split::Test})
        for (const Sample& sm : manifest.split(s))
            entries.emplace_back(sm.path.lexically_relative(manifest.root).generic_string(),
                                 git_blob_sha1(read_file(sm.path)));
    std::sort(entries.begin(), entries.end());
    std::string tree;
    for (const auto& [rel, h] : entries) tree += h + " " + rel + "\n";
    tree += git_blob_sha1(config_text) + " config.txt\n";
    return sha1_hex(tree);
}

// ---------------------------------------------------------------------------
// report helpers

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

void write_summary(const fs::path& run_dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(run_dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("metrics_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
    }
    if (files.empty()) throw std::runtime_error("no metrics_<split>.csv in " + run_dir.string() + "; run `dynenh eval` first");
    std::sort(files.begin(), files.end());
    std::ofstream out(run_dir / "summary.csv");
    out << "split,stream,metric,value\n";
    for (const fs::path& f : files) {
        const std::string split = f.stem().string().substr(8);
        const auto rows = read_csv(f);
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].size() == 3) out << split << ',' << rows[i][0] << ',' << rows[i][1] << ',' << rows[i][2] << '\n';
    }
    if (!out) throw IoError("cannot write summary.csv");
}

void write_loss_svg(const fs::path& log_csv, const fs::path& svg) {
    const auto rows = read_csv(log_csv);
    std::vector<std::string> phases;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double max_loss = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 3) continue;
        const double loss = std::stod(rows[i][2]);
        if (!std::isfinite(loss)) continue;
        if (!series.count(rows[i][0])) phases.push_back(rows[i][0]);
        series[rows[i][0]].emplace_back(static_cast<double>(i - 1), loss);
        max_loss = std::max(max_loss, loss);
    }
    const double w = 640, h = 360, pad = 40;
    const double n = std::max<double>(1.0, static_cast<double>(rows.size() - 2));
    if (max_loss <= 0.0) max_loss = 1.0;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
    std::ofstream out(svg);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << pad << "\" y=\"" << pad - 10 << "\" font-size=\"12\">loss_total (max "
        << format_number(max_loss) << ")</text>\n";
    for (std::size_t p = 0; p < phases.size(); ++p) {
        const char* c = colors[p % std::size(colors)];
        out << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
        for (const auto& [x, y] : series[phases[p]])
            out << pad + x / n * (w - 2 * pad) << ',' << h - pad - y / max_loss * (h - 2 * pad) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << w - pad - 80 << "\" y=\"" << pad + 14 * p << "\" font-size=\"11\" fill=\"" << c
            << "\">" << phases[p] << "</text>\n";
    }
    out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// commands

namespace {

struct ConfigFlags {
    std::string config_file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> direct;  // flag values keyed by config key
};

// Adds a flag that overrides one config key.
void key_flag(CLI::App* app, ConfigFlags& f, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [&f, key](const std::string& v) { f.direct[key] = v; }, help + " (config key " + key + ")");
}

void add_config_flags(CLI::App* app, ConfigFlags& f) {
    app->add_option("--config", f.config_file, "key=value config file");
    app->add_option("--set", f.sets, "override one config key, key=value (repeatable)");
    key_flag(app, f, "--seed", "seed", "training seed");
    key_flag(app, f, "--data", "data_dir", "dataset root");
    key_flag(app, f, "--cache", "cache_dir", "target cache directory");
}

void add_train_flags(CLI::App* app, ConfigFlags& f) {
    key_flag(app, f, "--approach", "approach", "fc|a1|a2|a3");
    key_flag(app, f, "--method", "method", "A1 enhancement method: bf|wls|gf|histeq|imsharp");
    key_flag(app, f, "--weighting", "weighting", "equal|mse");
    key_flag(app, f, "--epochs", "epochs", "phase-2 epochs");
    key_flag(app, f, "--pretrain-epochs", "pretrain_epochs", "phase-1 RGB epochs");
    key_flag(app, f, "--bank-epochs", "bank_epochs", "A1 epochs per method for the A2 bank");
    key_flag(app, f, "--batch-size", "batch_size", "mini-batch size");
    key_flag(app, f, "--filter-size", "filter_size", "dynamic filter size (5..7)");
}

// defaults < config file < DYNENH_CACHE_DIR < flags
RunConfig resolve_config(const ConfigFlags& f) {
    KeyValues kv;
    if (!f.config_file.empty()) kv.merge(KeyValues::load(f.config_file));
    if (const char* env = std::getenv("DYNENH_CACHE_DIR"); env && *env) kv.set("cache_dir", env);
    for (const std::string& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
        kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : f.direct) kv.set(k, v);
    RunConfig cfg = RunConfig::from_key_values(kv);
    if (!cfg.data_dir.empty()) cfg.data_dir = fs::absolute(cfg.data_dir).lexically_normal();
    if (cfg.cache_dir.empty() && !cfg.data_dir.empty()) cfg.cache_dir = cfg.data_dir / ".targets";
    if (!cfg.cache_dir.empty()) cfg.cache_dir = fs::absolute(cfg.cache_dir).lexically_normal();
    return cfg;
}

void echo_config(const RunConfig& cfg) {
    std::cout << "# resolved config\n" << cfg.to_key_values().to_text() << std::flush;
}

DatasetManifest open_dataset(const RunConfig& cfg) {
    if (cfg.data_dir.empty()) throw UsageError("no dataset: pass --data or set data_dir");
    return load_dataset(cfg.data_dir, cfg.split, cfg.data_seed);
}

std::vector<EnhanceMethod> methods_of(const RunConfig& cfg) {
    switch (cfg.approach) {
        case Approach::FC: return {};
        case Approach::A1: return {cfg.method};
        default: return {kAllMethods.begin(), kAllMethods.end()};
    }
}

RunConfig load_run_config(const fs::path& run_dir) {
    if (!fs::exists(run_dir / "config.txt")) throw UsageError(run_dir.string() + " is not a run directory (no config.txt)");
    return RunConfig::from_key_values(KeyValues::load(run_dir / "config.txt"));
}

void print_epoch(const EpochLog& e) {
    std::cout << e.phase << " epoch " << e.epoch << "  loss " << format_number(e.loss_total) << "  mse "
              << format_number(e.loss_mse) << "  cls " << format_number(e.loss_class) << "  train_acc "
              << format_number(e.train_accuracy) << "  val_acc " << format_number(e.val_accuracy) << std::endl;
}

int cmd_synth(const fs::path& out_dir, const SynthConfig& sc) {
    const SynthResult r = synth_texture_dataset(sc, out_dir);
    std::ofstream rep(out_dir / "oracle.txt");
    rep << "clean_accuracy=" << format_number(r.oracle.clean_accuracy) << '\n'
        << "blurred_accuracy=" << format_number(r.oracle.blurred_accuracy) << '\n'
        << "sharpened_accuracy=" << format_number(r.oracle.sharpened_accuracy) << '\n';
    std::cout << "wrote " << sc.class_count * sc.per_class << " images to " << out_dir.string() << '\n'
              << "oracle accuracy: clean " << format_number(r.oracle.clean_accuracy) << ", blurred "
              << format_number(r.oracle.blurred_accuracy) << ", sharpened "
              << format_number(r.oracle.sharpened_accuracy) << '\n';
    return 0;
}

int cmd_gen_targets(const ConfigFlags& f, const std::string& methods_csv) {
    const RunConfig cfg = resolve_config(f);
    echo_config(cfg);
    std::vector<EnhanceMethod> methods;
    std::stringstream ms(methods_csv);
    std::string name;
    while (std::getline(ms, name, ',')) {
        if (name == "all") {
            methods.assign(kAllMethods.begin(), kAllMethods.end());
            continue;
        }
        const auto m = parse_method(name);
        if (!m) throw UsageError("unknown method '" + name + "'");
        methods.push_back(*m);
    }
    const DatasetManifest manifest = open_dataset(cfg);
    const TargetReport rep = generate_targets(manifest, methods, cfg.enhance, cfg.cache_dir);
    std::cout << "targets: computed " << rep.computed << ", cached " << rep.skipped << ", spot-checked "
              << rep.revalidated << ", repaired " << rep.repaired << ", failed " << rep.failures.size() << '\n';
    for (const TargetFailure& tf : rep.failures)
        std::cerr << "failed: " << tf.image.string() << " [" << method_name(tf.method) << "]: " << tf.message << '\n';
    return rep.failures.empty() ? 0 : 2;
}

int cmd_train(const ConfigFlags& f, const fs::path& runs_root) {
    const RunConfig cfg = resolve_config(f);
    echo_config(cfg);
    const DatasetManifest manifest = open_dataset(cfg);
    const std::vector<EnhanceMethod> methods = methods_of(cfg);
    // load before creating the run directory so a missing cache leaves no debris
    const std::vector<LoadedSample> train = load_samples(manifest, Split::Train, cfg.cache_dir, methods);
    const std::vector<LoadedSample> val = load_samples(manifest, Split::Val, cfg.cache_dir, {});
    if (train.empty()) throw std::invalid_argument("training split is empty");

    const fs::path dir = create_run_dir(runs_root, approach_name(cfg.approach));
    DirLock lock(dir);
    const std::string config_text = cfg.to_key_values().to_text();
    std::ofstream(dir / "config.txt") << config_text;
    std::ofstream(dir / "inputs.sha1") << inputs_hash(manifest, config_text) << '\n';
    std::cout << "run directory: " << dir.string() << std::endl;

    Trainer trainer(cfg, manifest.class_count());
    trainer.set_epoch_hook(print_epoch);
    const RunResult res = run_training(trainer, train, val);
    write_log_csv(dir / "log.csv", res.log);
    save_models(dir, trainer, res.models);
    std::cout << "wrote " << (dir / "log.csv").string() << std::endl;
    return 0;
}

void dump_enhanced(const fs::path& out_dir, const Trainer& trainer, const TrainedModels& models,
                   const std::vector<LoadedSample>& samples, std::size_t count, const DatasetManifest& manifest) {
    if (models.methods.empty()) throw UsageError("--dump-enhanced needs a run with enhancement streams");
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < std::min(count, samples.size()); ++i) {
        const LoadedSample& s = samples[i];
        std::string stem = s.path.lexically_relative(manifest.root).replace_extension().generic_string();
        std::replace(stem.begin(), stem.end(), '/', '_');
        const Plane y = luminance(s.image);
        const std::vector<DynamicFilter> filters = stream_filters(trainer, models, y);
        for (std::size_t k = 0; k < models.methods.size(); ++k) {
            const Plane& t = s.targets.at(static_cast<std::size_t>(models.methods[k]));
            const Plane yp = clamp01(apply_filter(y, filters[k]));
            Plane comp(t.height(), t.width());
            for (std::size_t p = 0; p < comp.size(); ++p)
                comp.values()[p] = std::clamp(1.0 - std::abs(t.values()[p] - yp.values()[p]), 0.0, 1.0);
            const std::string base = stem + "." + std::string(method_name(models.methods[k]));
            write_gray(out_dir / (base + ".target.png"), clamp01(t));
            write_gray(out_dir / (base + ".enhanced.png"), yp);
            write_gray(out_dir / (base + ".diff_complement.png"), comp);
        }
    }
}

int cmd_eval(const fs::path& run_dir, const std::string& split_name_arg, std::optional<std::size_t> dump) {
    const RunConfig cfg = load_run_config(run_dir);
    echo_config(cfg);
    const Split split = parse_split(split_name_arg);
    const DatasetManifest manifest = open_dataset(cfg);
    const std::vector<LoadedSample> samples = load_samples(manifest, split, cfg.cache_dir, methods_of(cfg));
    if (samples.empty()) throw UsageError("split '" + split_name_arg + "' has no samples");
    DirLock lock(run_dir);
    Trainer trainer(cfg, manifest.class_count());
    const TrainedModels models = load_models(run_dir, trainer);
    const Evaluation ev = evaluate(trainer, models, samples, manifest.has_label_sets());
    const fs::path out = run_dir / ("metrics_" + split_name_arg + ".csv");
    write_metrics_csv(out, ev.rows);
    write_summary(run_dir);
    for (const MetricRow& r : ev.rows) std::cout << r.stream << ' ' << r.metric << ' ' << format_number(r.value) << '\n';
    if (dump) dump_enhanced(run_dir / "enhanced", trainer, models, samples, *dump, manifest);
    return 0;
}

int cmd_report(const fs::path& run_dir) {
    if (!fs::exists(run_dir / "config.txt")) throw UsageError(run_dir.string() + " is not a run directory");
    DirLock lock(run_dir);
    write_summary(run_dir);
    if (fs::exists(run_dir / "log.csv")) write_loss_svg(run_dir / "log.csv", run_dir / "loss.svg");
    std::cout << read_file(run_dir / "summary.csv");
    return 0;
}

void write_filter(const fs::path& base, const DynamicFilter& f) {
    write_plane(fs::path(base.string() + ".plane"), f.taps);
    std::ofstream out(base.string() + ".txt");
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (std::size_t j = 0; j < f.size(); ++j) out << (j ? " " : "") << format_number(f.taps(i, j));
        out << '\n';
    }
}

int cmd_export(const fs::path& run_dir, const std::string& split_arg, std::size_t limit) {
    const RunConfig cfg = load_run_config(run_dir);
    const DatasetManifest manifest = open_dataset(cfg);
    Trainer trainer(cfg, manifest.class_count());
    DirLock lock(run_dir);
    const TrainedModels models = load_models(run_dir, trainer);
    if (models.methods.empty()) throw UsageError("run has no enhancement filters to export");
    const fs::path out = run_dir / "filters";
    fs::create_directories(out);
    std::size_t written = 0;
    if (models.bank) {
        for (std::size_t k = 0; k < models.methods.size(); ++k, ++written)
            write_filter(out / ("static." + std::string(method_name(models.methods[k]))), models.bank->filters[k]);
    } else {
        const Split split = parse_split(split_arg);
        const auto& samples = manifest.split(split);
        for (std::size_t i = 0; i < samples.size() && i < limit; ++i) {
            std::string stem = samples[i].path.lexically_relative(manifest.root).replace_extension().generic_string();
            std::replace(stem.begin(), stem.end(), '/', '_');
            const Plane y = luminance(read_image(samples[i].path));
            const std::vector<DynamicFilter> filters = stream_filters(trainer, models, y);
            for (std::size_t k = 0; k < models.methods.size(); ++k, ++written)
                write_filter(out / (stem + "." + std::string(method_name(models.methods[k]))), filters[k]);
        }
    }
    std::cout << "exported " << written << " filters to " << out.string() << '\n';
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t coords) {
    const std::vector<GradcheckRow> rows = run_gradcheck(seed, coords);
    bool ok = true;
    std::cout << std::left << std::setw(22) << "layer" << std::setw(10) << "checked" << std::setw(8) << "kinked"
              << "max_rel_error\n";
    for (const GradcheckRow& r : rows) {
        ok = ok && r.max_rel_error < 1e-4;
        std::cout << std::left << std::setw(22) << r.name << std::setw(10) << r.checked
                  << std::setw(8) << r.kinked << format_number(r.max_rel_error) << (r.max_rel_error < 1e-4 ? "" : "  FAIL") << '\n';
    }
    return ok ? 0 : 2;
}

std::string keys_help() {
    std::string s = "\nConfig keys (key=default):\n";
    for (const auto& [k, v] : config_key_help()) s += "  " + k + "=" + v + "\n";
    s += "\nEnvironment: DYNENH_CACHE_DIR overrides cache_dir, DYNENH_THREADS sets worker threads.\n";
    return s;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"dynenh: dynamic enhancement filters for image classification"};
    app.require_subcommand(1);
    app.footer(keys_help());
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: DYNENH_THREADS or all cores)");

    int status = 0;
    ConfigFlags flags;
    fs::path runs_root = "runs";
    fs::path run_dir;
    std::string split = "test";
    std::string methods_csv = "all";
    std::optional<std::size_t> dump;
    std::size_t limit = static_cast<std::size_t>(-1);
    std::uint64_t seed = 3;
    std::size_t coords = 100;
    SynthConfig sc;
    fs::path synth_out;

    auto* synth = app.add_subcommand("synth-data", "write the synthetic blurred-texture corpus");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--classes", sc.class_count, "number of classes")->capture_default_str();
    synth->add_option("--per-class", sc.per_class, "images per class")->capture_default_str();
    synth->add_option("--extent", sc.extent, "image side in pixels")->capture_default_str();
    synth->add_option("--seed", sc.seed, "corpus seed")->capture_default_str();
    synth->add_option("--blur", sc.blur_sigma, "Gaussian blur sigma")->capture_default_str();

    auto* gen = app.add_subcommand("gen-targets", "compute and cache enhancement targets");
    add_config_flags(gen, flags);
    gen->add_option("--methods", methods_csv, "comma list of methods or 'all'")->capture_default_str();

    auto* train = app.add_subcommand("train", "train one approach into a new run directory");
    add_config_flags(train, flags);
    add_train_flags(train, flags);
    train->add_option("--runs", runs_root, "parent of run directories")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "evaluate a run on one split");
    eval->add_option("run_dir", run_dir, "run directory")->required();
    eval->add_option("--split", split, "train|val|test")->capture_default_str();
    eval->add_option("--dump-enhanced", dump, "write T, Y' and 1-|T-Y'| images for the first N images")
        ->expected(0, 1)
        ->default_str("1");

    auto* exp = app.add_subcommand("export-filters", "write learned filters as planes and text");
    exp->add_option("run_dir", run_dir, "run directory")->required();
    exp->add_option("--split", split, "split whose per-image filters are exported")->capture_default_str();
    exp->add_option("--limit", limit, "maximum number of images");

    auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    grad->add_option("--seed", seed, "random seed")->capture_default_str();
    grad->add_option("--coords", coords, "coordinates per check")->capture_default_str();

    auto* rep = app.add_subcommand("report", "summary.csv and loss.svg for a run");
    rep->add_option("run_dir", run_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (threads > 0) kernels::set_thread_count(threads);
        if (*synth) status = cmd_synth(synth_out, sc);
        else if (*gen) status = cmd_gen_targets(flags, methods_csv);
        else if (*train) status = cmd_train(flags, runs_root);
        else if (*eval) status = cmd_eval(run_dir, split, dump);
        else if (*exp) status = cmd_export(run_dir, split, limit);
        else if (*grad) status = cmd_gradcheck(seed, coords);
        else if (*rep) status = cmd_report(run_dir);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return status;
}

}  // namespace dynenh::cli

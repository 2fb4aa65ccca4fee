#include "helpers.hpp"

#include "dynenh/dataio.hpp"
#include "dynenh/image_io.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace dynenh;
namespace fs = std::filesystem;

namespace {

void write_class_tree(const fs::path& root, std::size_t classes, std::size_t per_class) {
    Rng rng(77);
    for (std::size_t c = 0; c < classes; ++c) {
        const fs::path dir = root / ("cls" + std::to_string(c));
        fs::create_directories(dir);
        for (std::size_t i = 0; i < per_class; ++i)
            write_image(dir / ("img" + std::to_string(i) + ".png"), testutil::random_image(12, 14, rng));
    }
}

std::set<fs::path> paths_of(const DatasetManifest& m) {
    std::set<fs::path> s;
    for (const auto* part : {&m.train, &m.val, &m.test})
        for (const Sample& x : *part) s.insert(x.path);
    return s;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("image and plane files round-trip") {
    testutil::TempDir dir("io");
    Rng rng(4);
    const ImageRGB img = testutil::random_image(7, 9, rng);
    write_image(dir.path / "a.png", img);
    const ImageRGB back = read_image(dir.path / "a.png");
    CHECK(testutil::max_abs_diff(back.g, img.g) <= 0.5 / 255 + 1e-12);
    write_image(dir.path / "a.ppm", back);
    CHECK(read_image(dir.path / "a.ppm") == back);
    const Plane p = testutil::random_plane(5, 3, rng, -2, 2);
    write_plane(dir.path / "p.plane", p);
    CHECK(read_plane(dir.path / "p.plane") == p);
    CHECK_THROWS_AS(read_image(dir.path / "none.png"), IoError);
}

TEST_CASE("directory dataset splits are stratified and seeded") {
    testutil::TempDir dir("ds");
    write_class_tree(dir.path, 3, 10);
    const DatasetManifest m = load_dataset(dir.path, {}, 5);
    CHECK(m.class_names == std::vector<std::string>{"cls0", "cls1", "cls2"});
    CHECK(m.train.size() == 15);
    CHECK(m.val.size() == 3);
    CHECK(m.test.size() == 12);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(std::count_if(m.train.begin(), m.train.end(), [c](const Sample& s) { return s.label == c; }) == 5);
    CHECK(paths_of(m).size() == 30);
    CHECK_FALSE(m.has_label_sets());

    const DatasetManifest again = load_dataset(dir.path, {}, 5);
    for (std::size_t i = 0; i < m.train.size(); ++i) CHECK(again.train[i].path == m.train[i].path);
    const DatasetManifest other = load_dataset(dir.path, {}, 6);
    bool differs = false;
    for (std::size_t i = 0; i < m.train.size(); ++i) differs |= other.train[i].path != m.train[i].path;
    CHECK(differs);
}

TEST_CASE("manifest with several labels and missing files") {
    testutil::TempDir dir("manifest");
    write_class_tree(dir.path, 2, 4);
    {
        std::ofstream out(dir.path / "manifest.csv");
        out << "path,labels\n";
        for (int i = 0; i < 4; ++i) out << "cls0/img" << i << ".png,0\n";
        for (int i = 0; i < 4; ++i) out << "cls1/img" << i << ".png,1,0\n";
    }
    const DatasetManifest m = load_dataset(dir.path, {}, 1);
    CHECK(m.class_count() == 2);
    CHECK(m.has_label_sets());
    for (const auto& s : m.train)
        if (s.label == 1) CHECK(s.all_labels() == std::vector<std::size_t>{1, 0});

    std::ofstream(dir.path / "manifest.csv", std::ios::app) << "cls1/ghost.png,1\nnowhere.png,0\n";
    try {
        load_dataset(dir.path, {}, 1);
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("ghost.png") != std::string::npos);
        CHECK(msg.find("nowhere.png") != std::string::npos);
    }
}

TEST_CASE("target cache: stems, reuse and invalidation") {
    testutil::TempDir dir("targets");
    write_class_tree(dir.path / "data", 2, 3);
    const DatasetManifest m = load_dataset(dir.path / "data", {}, 1);
    const fs::path cache = dir.path / "cache";
    const Sample& s = m.train.front();
    const fs::path tp = target_path(cache, m, s, EnhanceMethod::GF);
    CHECK(tp.filename().string().rfind(m.class_names[s.label] + "_img", 0) == 0);
    CHECK(tp.filename().string().ends_with(".gf.plane"));

    const std::vector<EnhanceMethod> methods = {EnhanceMethod::GF, EnhanceMethod::Imsharp};
    EnhanceParams params;
    TargetReport r = generate_targets(m, methods, params, cache);
    CHECK(r.computed == 12);
    CHECK(r.failures.empty());
    CHECK(read_plane(tp) == make_target(EnhanceMethod::GF, luminance(read_image(s.path)), params));

    r = generate_targets(m, methods, params, cache);
    CHECK(r.computed == 0);
    CHECK(r.skipped == 12);

    params.sharp_amount = 1.5;
    r = generate_targets(m, methods, params, cache);
    CHECK(r.computed == 12);
}

TEST_CASE("augmentation applies one geometry to all channels") {
    Rng rng(10);
    const ImageRGB img = testutil::random_image(20, 24, rng);
    const AugmentConfig cfg{16, true, 0.0};
    for (int k = 0; k < 20; ++k) {
        const AugmentDraw d = draw_augment(cfg, rng);
        const ImageRGB out = apply_augment(img, d, 16);
        CHECK(out.r == apply_geometry(img.r, d, 16));
        CHECK(out.b == apply_geometry(img.b, d, 16));
        CHECK(luminance(out) == apply_geometry(luminance(img), d, 16));
    }
    AugmentDraw corner;
    corner.position = 3;
    CHECK(apply_geometry(img.g, corner, 16)(15, 15) == img.g(19, 23));
    corner.flip = true;
    CHECK(apply_geometry(img.g, corner, 16)(0, 0) == img.g(4, 23));
    CHECK_THROWS_AS(apply_geometry(img.g, corner, 21), DimensionError);
}

TEST_CASE("flips and jitter respect the config") {
    Rng rng(3);
    const AugmentConfig off{16, false, 0.0};
    for (int k = 0; k < 50; ++k) {
        const AugmentDraw d = draw_augment(off, rng);
        CHECK_FALSE(d.flip);
        CHECK(d.gain == std::array<double, 3>{1.0, 1.0, 1.0});
    }
    const AugmentConfig jit{16, true, 0.1};
    for (int k = 0; k < 50; ++k)
        for (double g : draw_augment(jit, rng).gain) CHECK((g >= 0.9 && g <= 1.1));
}

TEST_CASE("synthetic images are seeded and in range") {
    SynthConfig cfg;
    cfg.extent = 32;
    Rng a(1), b(1);
    const SynthImage x = synth_texture_image(5, cfg, a), y = synth_texture_image(5, cfg, b);
    CHECK(x.blurred == y.blurred);
    for (int c = 0; c < 3; ++c)
        for (double v : x.blurred.channel(c).values()) CHECK((v >= 0.0 && v <= 1.0));
    CHECK_FALSE(x.clean == x.blurred);
}

TEST_CASE("synthetic corpus rewards sharpening under the oriented-energy oracle") {
    const testutil::TempDir dir("synth_oracle");
    const SynthConfig cfg;  // 8 classes x 60 images, 96x96, blur 1
    const SynthResult r = synth_texture_dataset(cfg, dir.path);
    CHECK(r.manifest.class_count() == 8);
    CHECK(r.oracle.clean_accuracy >= 0.95);
    CHECK(r.oracle.blurred_accuracy <= r.oracle.clean_accuracy - 0.10);
    CHECK(r.oracle.sharpened_accuracy >= r.oracle.clean_accuracy - 0.05);
}

}

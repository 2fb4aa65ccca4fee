#pragma once

#include "dynenh/autonet.hpp"
#include "dynenh/imgcore.hpp"

#include <filesystem>
#include <string>

namespace testutil {

inline dynenh::Plane random_plane(std::size_t h, std::size_t w, dynenh::Rng& rng, double lo = 0.0,
                                  double hi = 1.0) {
    dynenh::Plane p(h, w);
    for (double& v : p.values()) v = rng.uniform(lo, hi);
    return p;
}

inline dynenh::ImageRGB random_image(std::size_t h, std::size_t w, dynenh::Rng& rng) {
    return {random_plane(h, w, rng), random_plane(h, w, rng), random_plane(h, w, rng)};
}

inline double max_abs_diff(const dynenh::Plane& a, const dynenh::Plane& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("dynenh_test_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testutil

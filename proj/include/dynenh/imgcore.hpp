#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynenh {

/// Raised when plane/kernel/tensor extents do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A 2-D row-major grid of doubles. Carries luminance, chroma, kernels and
/// residuals alike; only images are expected to live in [0,1].
class Plane {
public:
    Plane() = default;
    Plane(std::size_t height, std::size_t width, double fill = 0.0);
    Plane(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }

    /// Clamp-to-edge read; coordinates may lie outside the plane.
    double at_clamped(long r, long c) const;

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Plane& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

struct ImageRGB {
    Plane r, g, b;

    ImageRGB() = default;
    ImageRGB(std::size_t height, std::size_t width, double fill = 0.0)
        : r(height, width, fill), g(height, width, fill), b(height, width, fill) {}
    ImageRGB(Plane red, Plane green, Plane blue);

    std::size_t height() const { return r.height(); }
    std::size_t width() const { return r.width(); }
    Plane& channel(int c) { return c == 0 ? r : (c == 1 ? g : b); }
    const Plane& channel(int c) const { return c == 0 ? r : (c == 1 ? g : b); }

    friend bool operator==(const ImageRGB&, const ImageRGB&) = default;
};

struct YCbCr {
    Plane y, cb, cr;
};

struct Anchor {
    std::size_t row = 0;
    std::size_t col = 0;
};

// BT.601 full range, zero-centred chroma.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;
inline constexpr double kCbScale = 0.564;
inline constexpr double kCrScale = 0.713;

YCbCr rgb_to_ycbcr(const ImageRGB& img);
ImageRGB ycbcr_to_rgb(const YCbCr& img);
Plane luminance(const ImageRGB& img);

/// Correlation (no kernel flip) with replicate padding:
/// out(i,j) = sum_{u,v} k(u,v) * p(i+u-anchor.row, j+v-anchor.col).
Plane convolve2d(const Plane& p, const Plane& kernel, Anchor anchor);

/// Windowed mean over (2r+1)^2 neighbourhoods, replicate padding, O(hw).
Plane box_filter(const Plane& p, std::size_t radius);

/// Normalised Gaussian truncated at ceil(3 sigma), applied separably with
/// replicate padding.
Plane gaussian_blur(const Plane& p, double sigma);

double mse(const Plane& a, const Plane& b);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();
/// Peak 1.0; identical planes give kInfinitePsnr.
double psnr(const Plane& a, const Plane& b);

double mean(const Plane& p);
double variance(const Plane& p);

Plane clamp01(Plane p);

/// Crop rows [top, top+h) x cols [left, left+w).
Plane crop(const Plane& p, std::size_t top, std::size_t left, std::size_t h, std::size_t w);
Plane flip_horizontal(const Plane& p);
Plane resize_bilinear(const Plane& p, std::size_t height, std::size_t width);
/// Largest centred square crop followed by bilinear resize to extent x extent.
Plane center_square(const Plane& p, std::size_t extent);

ImageRGB crop(const ImageRGB& img, std::size_t top, std::size_t left, std::size_t h, std::size_t w);
ImageRGB flip_horizontal(const ImageRGB& img);
ImageRGB center_crop(const ImageRGB& img, std::size_t extent);

}  // namespace dynenh

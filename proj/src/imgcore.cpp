#include "dynenh/imgcore.hpp"

#include "dynenh/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynenh {

Plane::Plane(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {
    if (height == 0 || width == 0) throw DimensionError("Plane: extents must be >= 1");
}

Plane::Plane(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height == 0 || width == 0) throw DimensionError("Plane: extents must be >= 1");
    if (data_.size() != height * width)
        throw DimensionError("Plane: data length " + std::to_string(data_.size()) +
                             " != " + std::to_string(height) + "x" + std::to_string(width));
}

double Plane::at_clamped(long r, long c) const {
    r = std::clamp<long>(r, 0, static_cast<long>(height_) - 1);
    c = std::clamp<long>(c, 0, static_cast<long>(width_) - 1);
    return data_[static_cast<std::size_t>(r) * width_ + static_cast<std::size_t>(c)];
}

ImageRGB::ImageRGB(Plane red, Plane green, Plane blue)
    : r(std::move(red)), g(std::move(green)), b(std::move(blue)) {
    if (!r.same_shape(g) || !r.same_shape(b))
        throw DimensionError("ImageRGB: channel extents differ");
}

namespace {

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

void require_same(const Plane& a, const Plane& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": " + std::to_string(a.height()) + "x" +
                             std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                             "x" + std::to_string(b.width()));
}

}  // namespace

YCbCr rgb_to_ycbcr(const ImageRGB& img) {
    const std::size_t h = img.height(), w = img.width();
    YCbCr out{Plane(h, w), Plane(h, w), Plane(h, w)};
    for (std::size_t i = 0; i < h * w; ++i) {
        const double r = clamp_unit(img.r.values()[i]);
        const double g = clamp_unit(img.g.values()[i]);
        const double b = clamp_unit(img.b.values()[i]);
        const double y = kLumaR * r + kLumaG * g + kLumaB * b;
        out.y.values()[i] = y;
        out.cb.values()[i] = kCbScale * (b - y);
        out.cr.values()[i] = kCrScale * (r - y);
    }
    return out;
}

ImageRGB ycbcr_to_rgb(const YCbCr& img) {
    require_same(img.y, img.cb, "ycbcr_to_rgb");
    require_same(img.y, img.cr, "ycbcr_to_rgb");
    const std::size_t h = img.y.height(), w = img.y.width();
    ImageRGB out(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
        const double y = img.y.values()[i];
        const double r = y + img.cr.values()[i] / kCrScale;
        const double b = y + img.cb.values()[i] / kCbScale;
        const double g = (y - kLumaR * r - kLumaB * b) / kLumaG;
        out.r.values()[i] = clamp_unit(r);
        out.g.values()[i] = clamp_unit(g);
        out.b.values()[i] = clamp_unit(b);
    }
    return out;
}

Plane luminance(const ImageRGB& img) { return rgb_to_ycbcr(img).y; }

Plane convolve2d(const Plane& p, const Plane& kernel, Anchor anchor) {
    if (p.empty() || kernel.empty()) throw DimensionError("convolve2d: empty input");
    if (kernel.height() > p.height() || kernel.width() > p.width())
        throw DimensionError("convolve2d: kernel " + std::to_string(kernel.height()) + "x" +
                             std::to_string(kernel.width()) + " larger than plane " +
                             std::to_string(p.height()) + "x" + std::to_string(p.width()));
    if (anchor.row >= kernel.height() || anchor.col >= kernel.width())
        throw DimensionError("convolve2d: anchor outside kernel");
    Plane out(p.height(), p.width());
    kernels::parallel::plane_correlate(
        {p.height(), p.width(), kernel.height(), kernel.width(), anchor.row, anchor.col},
        p.values(), kernel.values(), out.values());
    return out;
}

Plane box_filter(const Plane& p, std::size_t radius) {
    if (radius == 0) return p;
    const long h = static_cast<long>(p.height()), w = static_cast<long>(p.width());
    const long r = static_cast<long>(radius);
    const double norm = 1.0 / static_cast<double>(2 * r + 1);
    auto cl = [](long v, long n) { return std::clamp<long>(v, 0, n - 1); };

    Plane horiz(p.height(), p.width());
    for (long i = 0; i < h; ++i) {
        const double* row = p.values().data() + i * w;
        double* dst = horiz.values().data() + i * w;
        double s = 0.0;
        for (long k = -r; k <= r; ++k) s += row[cl(k, w)];
        for (long j = 0; j < w; ++j) {
            dst[j] = s * norm;
            s += row[cl(j + r + 1, w)] - row[cl(j - r, w)];
        }
    }
    Plane out(p.height(), p.width());
    std::vector<double> col(static_cast<std::size_t>(w), 0.0);
    for (long k = -r; k <= r; ++k)
        for (long j = 0; j < w; ++j) col[j] += horiz(cl(k, h), j);
    for (long i = 0; i < h; ++i) {
        const long add = cl(i + r + 1, h), sub = cl(i - r, h);
        for (long j = 0; j < w; ++j) {
            out(i, j) = col[j] * norm;
            col[j] += horiz(add, j) - horiz(sub, j);
        }
    }
    return out;
}

Plane gaussian_blur(const Plane& p, double sigma) {
    if (sigma <= 0.0) return p;
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    for (long k = -radius; k <= radius; ++k)
        taps[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    const double total = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= total;

    const long h = static_cast<long>(p.height()), w = static_cast<long>(p.width());
    Plane horiz(p.height(), p.width()), out(p.height(), p.width());
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            double s = 0.0;
            for (long k = -radius; k <= radius; ++k) s += taps[k + radius] * p.at_clamped(i, j + k);
            horiz(i, j) = s;
        }
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            double s = 0.0;
            for (long k = -radius; k <= radius; ++k)
                s += taps[k + radius] * horiz.at_clamped(i + k, j);
            out(i, j) = s;
        }
    return out;
}

double mse(const Plane& a, const Plane& b) {
    require_same(a, b, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

double psnr(const Plane& a, const Plane& b) {
    const double m = mse(a, b);
    if (m == 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(1.0 / m);
}

double mean(const Plane& p) {
    return std::accumulate(p.values().begin(), p.values().end(), 0.0) /
           static_cast<double>(p.size());
}

double variance(const Plane& p) {
    const double m = mean(p);
    double s = 0.0;
    for (double v : p.values()) s += (v - m) * (v - m);
    return s / static_cast<double>(p.size());
}

Plane clamp01(Plane p) {
    for (double& v : p.values()) v = clamp_unit(v);
    return p;
}

Plane crop(const Plane& p, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
    if (top + h > p.height() || left + w > p.width())
        throw DimensionError("crop: window exceeds plane");
    Plane out(h, w);
    for (std::size_t i = 0; i < h; ++i)
        std::copy_n(p.values().begin() + static_cast<long>((top + i) * p.width() + left), w,
                    out.values().begin() + static_cast<long>(i * w));
    return out;
}

Plane flip_horizontal(const Plane& p) {
    Plane out(p.height(), p.width());
    for (std::size_t i = 0; i < p.height(); ++i)
        for (std::size_t j = 0; j < p.width(); ++j) out(i, j) = p(i, p.width() - 1 - j);
    return out;
}

Plane resize_bilinear(const Plane& p, std::size_t height, std::size_t width) {
    if (height == p.height() && width == p.width()) return p;
    Plane out(height, width);
    const double sy = static_cast<double>(p.height()) / static_cast<double>(height);
    const double sx = static_cast<double>(p.width()) / static_cast<double>(width);
    for (std::size_t i = 0; i < height; ++i) {
        const double fy = std::max(0.0, (static_cast<double>(i) + 0.5) * sy - 0.5);
        const long y0 = static_cast<long>(fy);
        const double ty = fy - static_cast<double>(y0);
        for (std::size_t j = 0; j < width; ++j) {
            const double fx = std::max(0.0, (static_cast<double>(j) + 0.5) * sx - 0.5);
            const long x0 = static_cast<long>(fx);
            const double tx = fx - static_cast<double>(x0);
            const double top = (1 - tx) * p.at_clamped(y0, x0) + tx * p.at_clamped(y0, x0 + 1);
            const double bot =
                (1 - tx) * p.at_clamped(y0 + 1, x0) + tx * p.at_clamped(y0 + 1, x0 + 1);
            out(i, j) = (1 - ty) * top + ty * bot;
        }
    }
    return out;
}

Plane center_square(const Plane& p, std::size_t extent) {
    const std::size_t side = std::min(p.height(), p.width());
    const Plane sq = crop(p, (p.height() - side) / 2, (p.width() - side) / 2, side, side);
    return resize_bilinear(sq, extent, extent);
}

ImageRGB crop(const ImageRGB& img, std::size_t top, std::size_t left, std::size_t h,
              std::size_t w) {
    return {crop(img.r, top, left, h, w), crop(img.g, top, left, h, w),
            crop(img.b, top, left, h, w)};
}

ImageRGB flip_horizontal(const ImageRGB& img) {
    return {flip_horizontal(img.r), flip_horizontal(img.g), flip_horizontal(img.b)};
}

ImageRGB center_crop(const ImageRGB& img, std::size_t extent) {
    if (extent > img.height() || extent > img.width())
        throw DimensionError("center_crop: extent exceeds image");
    return crop(img, (img.height() - extent) / 2, (img.width() - extent) / 2, extent, extent);
}

}  // namespace dynenh

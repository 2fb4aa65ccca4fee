#include "dynenh/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace dynenh::kernels {

namespace {

int& configured_threads() {
    static int n = [] {
        if (const char* env = std::getenv("DYNENH_THREADS")) {
            const int v = std::atoi(env);
            if (v > 0) return v;
        }
        return omp_get_max_threads();
    }();
    return n;
}

long clampi(long v, long n) { return std::clamp<long>(v, 0, n - 1); }

// col[r][p], r = (c*k + ky)*k + kx, p = y*ow + x
void im2col(const ConvShape& s, std::span<const double> in, std::vector<double>& col) {
    const std::size_t oh = s.out_height(), ow = s.out_width(), k = s.kernel;
    const std::size_t rows = s.in_channels * k * k, cols = oh * ow;
    col.resize(rows * cols);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t c = r / (k * k), ky = (r / k) % k, kx = r % k;
        double* dst = col.data() + r * cols;
        for (std::size_t y = 0; y < oh; ++y) {
            const double* src = in.data() + (c * s.in_height + y * s.stride + ky) * s.in_width + kx;
            for (std::size_t x = 0; x < ow; ++x) dst[y * ow + x] = src[x * s.stride];
        }
    }
}

}  // namespace

int thread_count() { return configured_threads(); }
void set_thread_count(int n) { configured_threads() = std::max(1, n); }

namespace parallel {

void plane_correlate(const PlaneConv& s, std::span<const double> in,
                     std::span<const double> kernel, std::span<double> out) {
    const long h = static_cast<long>(s.height), w = static_cast<long>(s.width);
    const long kh = static_cast<long>(s.kh), kw = static_cast<long>(s.kw);
    const long ar = static_cast<long>(s.ar), ac = static_cast<long>(s.ac);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (long i = 0; i < h; ++i) {
        const bool row_inside = i - ar >= 0 && i - ar + kh <= h;
        for (long j = 0; j < w; ++j) {
            double acc = 0.0;
            if (row_inside && j - ac >= 0 && j - ac + kw <= w) {
                const double* base = in.data() + (i - ar) * w + (j - ac);
                for (long u = 0; u < kh; ++u)
                    for (long v = 0; v < kw; ++v) acc += kernel[u * kw + v] * base[u * w + v];
            } else {
                for (long u = 0; u < kh; ++u) {
                    const long r = clampi(i + u - ar, h);
                    for (long v = 0; v < kw; ++v)
                        acc += kernel[u * kw + v] * in[r * w + clampi(j + v - ac, w)];
                }
            }
            out[i * w + j] = acc;
        }
    }
}

void conv_forward(const ConvShape& s, std::span<const double> in,
                  std::span<const double> weights, std::span<const double> bias,
                  std::span<double> out) {
    std::vector<double> col;
    im2col(s, in, col);
    const std::size_t rows = s.in_channels * s.kernel * s.kernel;
    const std::size_t cols = s.out_height() * s.out_width();
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (std::size_t o = 0; o < s.out_channels; ++o) {
        double* dst = out.data() + o * cols;
        std::fill(dst, dst + cols, bias[o]);
        const double* wrow = weights.data() + o * rows;
        for (std::size_t r = 0; r < rows; ++r) {
            const double wv = wrow[r];
            const double* src = col.data() + r * cols;
            for (std::size_t p = 0; p < cols; ++p) dst[p] += wv * src[p];
        }
    }
}

void conv_backward(const ConvShape& s, std::span<const double> in,
                   std::span<const double> weights, std::span<const double> grad_out,
                   std::span<double> grad_in, std::span<double> grad_weights,
                   std::span<double> grad_bias) {
    std::vector<double> col;
    im2col(s, in, col);
    const std::size_t k = s.kernel, oh = s.out_height(), ow = s.out_width();
    const std::size_t rows = s.in_channels * k * k, cols = oh * ow;

#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (std::size_t o = 0; o < s.out_channels; ++o) {
        const double* g = grad_out.data() + o * cols;
        double gb = 0.0;
#pragma omp simd reduction(+ : gb)
        for (std::size_t p = 0; p < cols; ++p) gb += g[p];
        grad_bias[o] += gb;
        double* gw = grad_weights.data() + o * rows;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* src = col.data() + r * cols;
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (std::size_t p = 0; p < cols; ++p) acc += g[p] * src[p];
            gw[r] += acc;
        }
    }

    // dcol = W^T * grad_out, reusing col as storage.
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
        double* dst = col.data() + r * cols;
        std::fill(dst, dst + cols, 0.0);
        for (std::size_t o = 0; o < s.out_channels; ++o) {
            const double wv = weights[o * rows + r];
            const double* g = grad_out.data() + o * cols;
            for (std::size_t p = 0; p < cols; ++p) dst[p] += wv * g[p];
        }
    }

    std::fill(grad_in.begin(), grad_in.end(), 0.0);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (std::size_t c = 0; c < s.in_channels; ++c)
        for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
                const double* src = col.data() + ((c * k + ky) * k + kx) * cols;
                for (std::size_t y = 0; y < oh; ++y) {
                    double* dst = grad_in.data() + (c * s.in_height + y * s.stride + ky) *
                                                       s.in_width + kx;
                    for (std::size_t x = 0; x < ow; ++x) dst[x * s.stride] += src[y * ow + x];
                }
            }
}

void bilateral(std::size_t height, std::size_t width, std::span<const double> in,
               double sigma_s, double sigma_r, std::span<double> out) {
    const long h = static_cast<long>(height), w = static_cast<long>(width);
    const long radius = static_cast<long>(std::ceil(3.0 * sigma_s));
    const long side = 2 * radius + 1;
    std::vector<double> spatial(static_cast<std::size_t>(side * side));
    for (long dy = -radius; dy <= radius; ++dy)
        for (long dx = -radius; dx <= radius; ++dx)
            spatial[(dy + radius) * side + dx + radius] =
                std::exp(-(dy * dy + dx * dx) / (2.0 * sigma_s * sigma_s));
    const double inv_two_r2 = 1.0 / (2.0 * sigma_r * sigma_r);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            const double center = in[i * w + j];
            double num = 0.0, den = 0.0;
            for (long dy = -radius; dy <= radius; ++dy) {
                const long r = clampi(i + dy, h);
                for (long dx = -radius; dx <= radius; ++dx) {
                    const double q = in[r * w + clampi(j + dx, w)];
                    const double wt = spatial[(dy + radius) * side + dx + radius] *
                                      std::exp(-(q - center) * (q - center) * inv_two_r2);
                    num += wt * q;
                    den += wt;
                }
            }
            out[i * w + j] = num / den;
        }
}

}  // namespace parallel
}  // namespace dynenh::kernels

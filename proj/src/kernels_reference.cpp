#include "dynenh/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dynenh::kernels::reference {

namespace {
long clampi(long v, long n) { return std::clamp<long>(v, 0, n - 1); }
}  // namespace

void plane_correlate(const PlaneConv& s, std::span<const double> in,
                     std::span<const double> kernel, std::span<double> out) {
    const long h = static_cast<long>(s.height), w = static_cast<long>(s.width);
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            double acc = 0.0;
            for (std::size_t u = 0; u < s.kh; ++u)
                for (std::size_t v = 0; v < s.kw; ++v) {
                    const long r = clampi(i + static_cast<long>(u) - static_cast<long>(s.ar), h);
                    const long c = clampi(j + static_cast<long>(v) - static_cast<long>(s.ac), w);
                    acc += kernel[u * s.kw + v] * in[r * w + c];
                }
            out[i * w + j] = acc;
        }
}

void conv_forward(const ConvShape& s, std::span<const double> in,
                  std::span<const double> weights, std::span<const double> bias,
                  std::span<double> out) {
    const std::size_t oh = s.out_height(), ow = s.out_width(), k = s.kernel;
    for (std::size_t o = 0; o < s.out_channels; ++o)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = bias[o];
                for (std::size_t c = 0; c < s.in_channels; ++c)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx)
                            acc += weights[((o * s.in_channels + c) * k + ky) * k + kx] *
                                   in[(c * s.in_height + y * s.stride + ky) * s.in_width +
                                      x * s.stride + kx];
                out[(o * oh + y) * ow + x] = acc;
            }
}

void conv_backward(const ConvShape& s, std::span<const double> in,
                   std::span<const double> weights, std::span<const double> grad_out,
                   std::span<double> grad_in, std::span<double> grad_weights,
                   std::span<double> grad_bias) {
    const std::size_t oh = s.out_height(), ow = s.out_width(), k = s.kernel;
    std::fill(grad_in.begin(), grad_in.end(), 0.0);
    for (std::size_t o = 0; o < s.out_channels; ++o)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                const double g = grad_out[(o * oh + y) * ow + x];
                grad_bias[o] += g;
                for (std::size_t c = 0; c < s.in_channels; ++c)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const std::size_t wi = ((o * s.in_channels + c) * k + ky) * k + kx;
                            const std::size_t ii =
                                (c * s.in_height + y * s.stride + ky) * s.in_width +
                                x * s.stride + kx;
                            grad_weights[wi] += g * in[ii];
                            grad_in[ii] += g * weights[wi];
                        }
            }
}

void bilateral(std::size_t height, std::size_t width, std::span<const double> in,
               double sigma_s, double sigma_r, std::span<double> out) {
    const long h = static_cast<long>(height), w = static_cast<long>(width);
    const long radius = static_cast<long>(std::ceil(3.0 * sigma_s));
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            const double center = in[i * w + j];
            double num = 0.0, den = 0.0;
            for (long dy = -radius; dy <= radius; ++dy)
                for (long dx = -radius; dx <= radius; ++dx) {
                    const double q = in[clampi(i + dy, h) * w + clampi(j + dx, w)];
                    const double ws = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma_s * sigma_s));
                    const double wr =
                        std::exp(-(q - center) * (q - center) / (2.0 * sigma_r * sigma_r));
                    num += ws * wr * q;
                    den += ws * wr;
                }
            out[i * w + j] = num / den;
        }
}

}  // namespace dynenh::kernels::reference

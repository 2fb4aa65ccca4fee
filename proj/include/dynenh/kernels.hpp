#pragma once

// Hot loops of the project, each in two flavours:
//   reference::  straightforward serial loops; normative, used by tests
//   parallel::   OpenMP + im2col/GEMM versions used by the library
// The parallel kernels never split a single output's summation across
// threads, so their results do not depend on the thread count.

#include <cstddef>
#include <span>

namespace dynenh::kernels {

struct ConvShape {
    std::size_t in_channels = 1;
    std::size_t in_height = 1;
    std::size_t in_width = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 1;
    std::size_t stride = 1;

    std::size_t out_height() const { return (in_height - kernel) / stride + 1; }
    std::size_t out_width() const { return (in_width - kernel) / stride + 1; }
    std::size_t weight_count() const { return out_channels * in_channels * kernel * kernel; }
    std::size_t input_count() const { return in_channels * in_height * in_width; }
    std::size_t output_count() const { return out_channels * out_height() * out_width(); }
};

// Plane correlation with replicate padding. `out` has height*width entries.
// The kernel is kh x kw, anchored at (ar, ac).
struct PlaneConv {
    std::size_t height, width, kh, kw, ar, ac;
};

namespace reference {

void plane_correlate(const PlaneConv& s, std::span<const double> in,
                     std::span<const double> kernel, std::span<double> out);

// Valid convolution (cross-correlation), weights laid out [out][in][ky][kx].
void conv_forward(const ConvShape& s, std::span<const double> in,
                  std::span<const double> weights, std::span<const double> bias,
                  std::span<double> out);

// Accumulates into grad_weights / grad_bias; overwrites grad_in.
void conv_backward(const ConvShape& s, std::span<const double> in,
                   std::span<const double> weights, std::span<const double> grad_out,
                   std::span<double> grad_in, std::span<double> grad_weights,
                   std::span<double> grad_bias);

// Direct bilateral filter, window truncated at ceil(3 sigma_s), replicate padding.
void bilateral(std::size_t height, std::size_t width, std::span<const double> in,
               double sigma_s, double sigma_r, std::span<double> out);

}  // namespace reference

namespace parallel {

void plane_correlate(const PlaneConv& s, std::span<const double> in,
                     std::span<const double> kernel, std::span<double> out);

void conv_forward(const ConvShape& s, std::span<const double> in,
                  std::span<const double> weights, std::span<const double> bias,
                  std::span<double> out);

void conv_backward(const ConvShape& s, std::span<const double> in,
                   std::span<const double> weights, std::span<const double> grad_out,
                   std::span<double> grad_in, std::span<double> grad_weights,
                   std::span<double> grad_bias);

void bilateral(std::size_t height, std::size_t width, std::span<const double> in,
               double sigma_s, double sigma_r, std::span<double> out);

}  // namespace parallel

/// Threads used by the parallel kernels; honours DYNENH_THREADS when set.
int thread_count();
void set_thread_count(int n);

}  // namespace dynenh::kernels

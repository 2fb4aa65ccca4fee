#pragma once

#include "dynenh/imgcore.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dynenh {

/// The five classical enhancement methods, in stream order 1..K.
enum class EnhanceMethod { BF = 0, WLS = 1, GF = 2, HistEq = 3, Imsharp = 4 };

inline constexpr std::size_t kMethodCount = 5;
inline constexpr std::array<EnhanceMethod, kMethodCount> kAllMethods = {
    EnhanceMethod::BF, EnhanceMethod::WLS, EnhanceMethod::GF, EnhanceMethod::HistEq,
    EnhanceMethod::Imsharp};

std::string_view method_name(EnhanceMethod m);
/// Case-insensitive; nullopt for unknown names.
std::optional<EnhanceMethod> parse_method(std::string_view name);

struct EnhanceParams {
    double wls_lambda = 0.125;
    double wls_alpha = 1.2;
    double wls_eps = 1e-4;
    double detail_boost_c = 1.2;
    double bf_sigma_spatial_frac = 0.02;
    double bf_sigma_range_frac = 0.5;
    double gf_radius_frac = 0.04;
    double gf_eps_frac = 0.01;
    double sharp_amount = 2.0;
    double sharp_radius = 1.0;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct WlsResult {
    Plane smoothed;
    std::size_t iterations = 0;
    double residual = 0.0;  // ||(I + lambda A) u - y||_inf
};

/// Edge-aware smoothing: minimises |u-y|^2 + lambda * sum(a_x u_x^2 + a_y u_y^2)
/// with a = (|grad log(y+1e-4)|^alpha + eps)^-1, via Jacobi-preconditioned CG.
/// Throws ConvergenceError when the residual stays above tolerance.
WlsResult wls_solve(const Plane& y, double lambda, double alpha, double eps,
                    double tolerance = 1e-7, std::size_t max_iterations = 20000);
Plane wls_smooth(const Plane& y, double lambda, double alpha, double eps);

/// Applies (I + lambda A) to u for the system wls_solve builds from `y`.
Plane wls_system_apply(const Plane& y, double lambda, double alpha, double eps, const Plane& u);

Plane bilateral(const Plane& y, double sigma_s, double sigma_r);
Plane guided(const Plane& y, const Plane& guide, std::size_t radius, double eps);
Plane hist_equalize(const Plane& y);
Plane unsharp(const Plane& y, double radius, double amount);

/// Resolved per-image parameters for the adaptive filters.
struct AdaptiveParams {
    double bf_sigma_s;
    double bf_sigma_r;
    std::size_t gf_radius;
    double gf_eps;
};
AdaptiveParams resolve_adaptive(const Plane& y, const EnhanceParams& params);

/// Detail-boosted base for BF/WLS/GF, direct output for HistEq/Imsharp;
/// always clamped to [0,1].
Plane make_target(EnhanceMethod method, const Plane& y, const EnhanceParams& params);

}  // namespace dynenh

#include "dynenh/enhance.hpp"

#include "dynenh/kernels.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <vector>

namespace dynenh {

std::string_view method_name(EnhanceMethod m) {
    switch (m) {
        case EnhanceMethod::BF: return "bf";
        case EnhanceMethod::WLS: return "wls";
        case EnhanceMethod::GF: return "gf";
        case EnhanceMethod::HistEq: return "histeq";
        case EnhanceMethod::Imsharp: return "imsharp";
    }
    return "?";
}

std::optional<EnhanceMethod> parse_method(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (EnhanceMethod m : kAllMethods)
        if (method_name(m) == lower) return m;
    return std::nullopt;
}

namespace {

// Smoothness weights between p and its right (ax) / lower (ay) neighbour.
// The last column of ax and last row of ay are zero.
struct WlsWeights {
    Plane ax, ay;
};

WlsWeights wls_weights(const Plane& y, double alpha, double eps) {
    const std::size_t h = y.height(), w = y.width();
    Plane log_y(h, w);
    for (std::size_t i = 0; i < y.size(); ++i) log_y.values()[i] = std::log(y.values()[i] + 1e-4);
    WlsWeights wt{Plane(h, w), Plane(h, w)};
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            if (j + 1 < w)
                wt.ax(i, j) = 1.0 / (std::pow(std::abs(log_y(i, j + 1) - log_y(i, j)), alpha) + eps);
            if (i + 1 < h)
                wt.ay(i, j) = 1.0 / (std::pow(std::abs(log_y(i + 1, j) - log_y(i, j)), alpha) + eps);
        }
    return wt;
}

void system_apply(const WlsWeights& wt, double lambda, const Plane& u, Plane& out) {
    const std::size_t h = u.height(), w = u.width();
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const double up = u(i, j);
            double acc = 0.0;
            if (j + 1 < w) acc += wt.ax(i, j) * (up - u(i, j + 1));
            if (j > 0) acc += wt.ax(i, j - 1) * (up - u(i, j - 1));
            if (i + 1 < h) acc += wt.ay(i, j) * (up - u(i + 1, j));
            if (i > 0) acc += wt.ay(i - 1, j) * (up - u(i - 1, j));
            out(i, j) = up + lambda * acc;
        }
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

Plane wls_system_apply(const Plane& y, double lambda, double alpha, double eps, const Plane& u) {
    if (!y.same_shape(u)) throw DimensionError("wls_system_apply: extents differ");
    Plane out(u.height(), u.width());
    system_apply(wls_weights(y, alpha, eps), lambda, u, out);
    return out;
}

WlsResult wls_solve(const Plane& y, double lambda, double alpha, double eps, double tolerance,
                    std::size_t max_iterations) {
    if (lambda < 0.0) throw std::invalid_argument("wls_solve: lambda must be >= 0");
    if (lambda == 0.0) return {y, 0, 0.0};

    const std::size_t h = y.height(), w = y.width(), n = y.size();
    const WlsWeights wt = wls_weights(y, alpha, eps);

    Plane diag(h, w);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            double s = 0.0;
            if (j + 1 < w) s += wt.ax(i, j);
            if (j > 0) s += wt.ax(i, j - 1);
            if (i + 1 < h) s += wt.ay(i, j);
            if (i > 0) s += wt.ay(i - 1, j);
            diag(i, j) = 1.0 + lambda * s;
        }

    Plane u = y, au(h, w), r(h, w), z(h, w), d(h, w), ad(h, w);
    system_apply(wt, lambda, u, au);
    for (std::size_t k = 0; k < n; ++k) {
        r.values()[k] = y.values()[k] - au.values()[k];
        z.values()[k] = r.values()[k] / diag.values()[k];
    }
    d = z;
    double rz = dot(r.values(), z.values());
    double res = inf_norm(r.values());
    std::size_t it = 0;
    for (; it < max_iterations && res >= tolerance; ++it) {
        system_apply(wt, lambda, d, ad);
        const double step = rz / dot(d.values(), ad.values());
        for (std::size_t k = 0; k < n; ++k) {
            u.values()[k] += step * d.values()[k];
            r.values()[k] -= step * ad.values()[k];
            z.values()[k] = r.values()[k] / diag.values()[k];
        }
        const double rz_next = dot(r.values(), z.values());
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t k = 0; k < n; ++k) d.values()[k] = z.values()[k] + beta * d.values()[k];
        res = inf_norm(r.values());
        // Recompute the true residual periodically; the recursive one drifts.
        if (it % 50 == 49 || res < tolerance) {
            system_apply(wt, lambda, u, au);
            for (std::size_t k = 0; k < n; ++k) r.values()[k] = y.values()[k] - au.values()[k];
            res = inf_norm(r.values());
        }
    }
    if (res >= tolerance)
        throw ConvergenceError("wls_solve: no convergence after " + std::to_string(it) +
                                   " iterations, residual " + std::to_string(res),
                               res);
    return {std::move(u), it, res};
}

Plane wls_smooth(const Plane& y, double lambda, double alpha, double eps) {
    return wls_solve(y, lambda, alpha, eps).smoothed;
}

Plane bilateral(const Plane& y, double sigma_s, double sigma_r) {
    if (sigma_s <= 0.0 || sigma_r <= 0.0)
        throw std::invalid_argument("bilateral: sigmas must be positive");
    Plane out(y.height(), y.width());
    kernels::parallel::bilateral(y.height(), y.width(), y.values(), sigma_s, sigma_r,
                                 out.values());
    return out;
}

Plane guided(const Plane& y, const Plane& guide, std::size_t radius, double eps) {
    if (!y.same_shape(guide)) throw DimensionError("guided: input and guide extents differ");
    if (eps <= 0.0) throw std::invalid_argument("guided: eps must be positive");
    const std::size_t h = y.height(), w = y.width(), n = y.size();
    Plane gg(h, w), gy(h, w);
    for (std::size_t k = 0; k < n; ++k) {
        gg.values()[k] = guide.values()[k] * guide.values()[k];
        gy.values()[k] = guide.values()[k] * y.values()[k];
    }
    const Plane mean_g = box_filter(guide, radius);
    const Plane mean_y = box_filter(y, radius);
    const Plane mean_gg = box_filter(gg, radius);
    const Plane mean_gy = box_filter(gy, radius);
    Plane a(h, w), b(h, w);
    for (std::size_t k = 0; k < n; ++k) {
        const double mg = mean_g.values()[k];
        const double var = mean_gg.values()[k] - mg * mg;
        const double cov = mean_gy.values()[k] - mg * mean_y.values()[k];
        a.values()[k] = cov / (var + eps);
        b.values()[k] = mean_y.values()[k] - a.values()[k] * mg;
    }
    const Plane mean_a = box_filter(a, radius);
    const Plane mean_b = box_filter(b, radius);
    Plane out(h, w);
    for (std::size_t k = 0; k < n; ++k)
        out.values()[k] = mean_a.values()[k] * guide.values()[k] + mean_b.values()[k];
    return out;
}

Plane hist_equalize(const Plane& y) {
    constexpr std::size_t kBins = 256;
    auto bin_of = [](double v) {
        return std::min<std::size_t>(kBins - 1,
                                     static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * kBins));
    };
    std::array<double, kBins> cdf{};
    for (double v : y.values()) cdf[bin_of(v)] += 1.0;
    double run = 0.0;
    for (double& c : cdf) {
        run += c;
        c = run / static_cast<double>(y.size());
    }
    const double cdf_min = *std::find_if(cdf.begin(), cdf.end(), [](double c) { return c > 0.0; });
    if (cdf_min >= 1.0) return y;
    Plane out(y.height(), y.width());
    for (std::size_t k = 0; k < y.size(); ++k)
        out.values()[k] = (cdf[bin_of(y.values()[k])] - cdf_min) / (1.0 - cdf_min);
    return out;
}

Plane unsharp(const Plane& y, double radius, double amount) {
    if (radius <= 0.0) throw std::invalid_argument("unsharp: radius must be positive");
    if (amount == 0.0) return y;
    const Plane blurred = gaussian_blur(y, radius);
    Plane out(y.height(), y.width());
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double v = y.values()[k];
        out.values()[k] = std::clamp(v + amount * (v - blurred.values()[k]), 0.0, 1.0);
    }
    return out;
}

AdaptiveParams resolve_adaptive(const Plane& y, const EnhanceParams& params) {
    const double h = static_cast<double>(y.height()), w = static_cast<double>(y.width());
    const double var = variance(y);
    AdaptiveParams a{};
    a.bf_sigma_s = params.bf_sigma_spatial_frac * std::sqrt(h * h + w * w);
    a.bf_sigma_r = std::max(1e-3, params.bf_sigma_range_frac * std::sqrt(var));
    a.gf_radius = static_cast<std::size_t>(
        std::max(1.0, std::round(params.gf_radius_frac * std::min(h, w))));
    a.gf_eps = std::max(1e-4, params.gf_eps_frac * var);
    return a;
}

Plane make_target(EnhanceMethod method, const Plane& y, const EnhanceParams& params) {
    auto boost = [&](const Plane& base) {
        Plane out(y.height(), y.width());
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double b = base.values()[k];
            out.values()[k] =
                std::clamp(b + params.detail_boost_c * (y.values()[k] - b), 0.0, 1.0);
        }
        return out;
    };
    const AdaptiveParams a = resolve_adaptive(y, params);
    switch (method) {
        case EnhanceMethod::BF: return boost(bilateral(y, a.bf_sigma_s, a.bf_sigma_r));
        case EnhanceMethod::WLS:
            return boost(wls_smooth(y, params.wls_lambda, params.wls_alpha, params.wls_eps));
        case EnhanceMethod::GF: return boost(guided(y, y, a.gf_radius, a.gf_eps));
        case EnhanceMethod::HistEq: return hist_equalize(y);
        case EnhanceMethod::Imsharp: return unsharp(y, params.sharp_radius, params.sharp_amount);
    }
    throw std::invalid_argument("make_target: unknown method");
}

}  // namespace dynenh

#pragma once

// Slow, direct implementations used as references by the unit tests and the
// acceptance binary.

#include "dynenh/imgcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace oracle {

using dynenh::Anchor;
using dynenh::Plane;

inline Plane naive_correlate(const Plane& p, const Plane& k, Anchor a) {
    Plane out(p.height(), p.width());
    for (long i = 0; i < static_cast<long>(p.height()); ++i)
        for (long j = 0; j < static_cast<long>(p.width()); ++j) {
            double s = 0.0;
            for (long u = 0; u < static_cast<long>(k.height()); ++u)
                for (long v = 0; v < static_cast<long>(k.width()); ++v) {
                    const long r = std::clamp<long>(i + u - static_cast<long>(a.row), 0, p.height() - 1);
                    const long c = std::clamp<long>(j + v - static_cast<long>(a.col), 0, p.width() - 1);
                    s += k(u, v) * p(r, c);
                }
            out(i, j) = s;
        }
    return out;
}

inline Plane naive_box(const Plane& p, std::size_t radius) {
    const long r = static_cast<long>(radius);
    Plane out(p.height(), p.width());
    for (long i = 0; i < static_cast<long>(p.height()); ++i)
        for (long j = 0; j < static_cast<long>(p.width()); ++j) {
            double s = 0.0;
            for (long u = -r; u <= r; ++u)
                for (long v = -r; v <= r; ++v) s += p.at_clamped(i + u, j + v);
            out(i, j) = s / static_cast<double>((2 * r + 1) * (2 * r + 1));
        }
    return out;
}


// Dense (I + lambda A) built directly from the smoothness weights.
inline std::vector<double> dense_wls_matrix(const Plane& y, double lambda, double alpha, double eps) {
    const std::size_t h = y.height(), w = y.width(), n = h * w;
    std::vector<double> m(n * n, 0.0);
    auto idx = [w](std::size_t i, std::size_t j) { return i * w + j; };
    auto weight = [&](std::size_t a, std::size_t b) {
        const double d = std::log(y.values()[a] + 1e-4) - std::log(y.values()[b] + 1e-4);
        return 1.0 / (std::pow(std::abs(d), alpha) + eps);
    };
    for (std::size_t k = 0; k < n; ++k) m[k * n + k] = 1.0;
    auto link = [&](std::size_t a, std::size_t b) {
        const double c = lambda * weight(a, b);
        m[a * n + a] += c;
        m[b * n + b] += c;
        m[a * n + b] -= c;
        m[b * n + a] -= c;
    };
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            if (j + 1 < w) link(idx(i, j), idx(i, j + 1));
            if (i + 1 < h) link(idx(i, j), idx(i + 1, j));
        }
    return m;
}

// Cholesky solve of an SPD system.
inline std::vector<double> dense_solve(std::vector<double> m, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t j = 0; j < n; ++j) {
        double d = m[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= m[j * n + k] * m[j * n + k];
        d = std::sqrt(d);
        m[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
            m[i * n + j] = s / d;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) b[i] -= m[i * n + k] * b[k];
        b[i] /= m[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) b[i] -= m[k * n + i] * b[k];
        b[i] /= m[i * n + i];
    }
    return b;
}

inline std::vector<double> dense_apply(const std::vector<double>& m, std::span<const double> u) {
    const std::size_t n = u.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += m[i * n + j] * u[j];
    return out;
}

// Per-window linear regression of y on the guide, then averaging of the
// coefficients of every window covering a pixel.
inline Plane naive_guided(const Plane& y, const Plane& g, long r, double eps) {
    const long h = static_cast<long>(y.height()), w = static_cast<long>(y.width());
    Plane a(h, w), b(h, w);
    const double n = static_cast<double>((2 * r + 1) * (2 * r + 1));
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            double mg = 0, my = 0;
            for (long u = -r; u <= r; ++u)
                for (long v = -r; v <= r; ++v) {
                    mg += g.at_clamped(i + u, j + v);
                    my += y.at_clamped(i + u, j + v);
                }
            mg /= n;
            my /= n;
            double var = 0, cov = 0;
            for (long u = -r; u <= r; ++u)
                for (long v = -r; v <= r; ++v) {
                    const double dg = g.at_clamped(i + u, j + v) - mg;
                    var += dg * dg;
                    cov += dg * (y.at_clamped(i + u, j + v) - my);
                }
            a(i, j) = (cov / n) / (var / n + eps);
            b(i, j) = my - a(i, j) * mg;
        }
    Plane out(h, w);
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            double sa = 0, sb = 0;
            for (long u = -r; u <= r; ++u)
                for (long v = -r; v <= r; ++v) {
                    sa += a.at_clamped(i + u, j + v);
                    sb += b.at_clamped(i + u, j + v);
                }
            out(i, j) = sa / n * g(i, j) + sb / n;
        }
    return out;
}

inline Plane naive_bilateral(const Plane& y, double ss, double sr) {
    const long h = static_cast<long>(y.height()), w = static_cast<long>(y.width());
    const long r = static_cast<long>(std::ceil(3 * ss));
    Plane out(h, w);
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            double num = 0, den = 0;
            for (long u = -r; u <= r; ++u)
                for (long v = -r; v <= r; ++v) {
                    const double q = y.at_clamped(i + u, j + v);
                    const double d = q - y(i, j);
                    const double wt = std::exp(-(u * u + v * v) / (2 * ss * ss) - d * d / (2 * sr * sr));
                    num += wt * q;
                    den += wt;
                }
            out(i, j) = num / den;
        }
    return out;
}


// Straight transcription of the procedure: normalise, min-max flip, then
// shift by half the second-smallest value and give the zeroed stream the
// full second-smallest amount.
inline std::vector<double> weights_from_mse(std::vector<double> e) {
    const double s = std::accumulate(e.begin(), e.end(), 0.0);
    for (double& v : e) v /= s;
    const double mx = *std::max_element(e.begin(), e.end());
    const double mn = *std::min_element(e.begin(), e.end());
    for (double& v : e) v = (v - mx) / (mn - mx);
    std::vector<double> sorted = e;
    std::sort(sorted.begin(), sorted.end());
    const double s2 = *std::upper_bound(sorted.begin(), sorted.end(), 0.0);
    for (double& v : e) v = v == 0.0 ? v + s2 / 2 : v - s2 / 2;
    const double t = std::accumulate(e.begin(), e.end(), 0.0);
    for (double& v : e) v /= t;
    return e;
}


}  // namespace oracle

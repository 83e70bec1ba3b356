#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "prevci/rng.hpp"
#include "prevci/special_functions.hpp"

namespace prevci {

enum class DistKind { beta, gamma, point_mass };

// Closed-form confidence distribution: Beta(a, b), Gamma(shape, scale) or a
// point mass. A beta with a zero first (second) parameter collapses to a
// point mass at 0 (1), and a zero-shape gamma collapses to a point mass at
// 0, so zero-count inputs propagate exactly.
struct ConfDist {
    DistKind kind = DistKind::point_mass;
    double a = 0.0;  // beta a / gamma shape / point-mass value
    double b = 0.0;  // beta b / gamma scale

    static ConfDist beta_dist(double a, double b) {
        if (std::isnan(a) || std::isnan(b) || a < 0.0 || b < 0.0 || (a == 0.0 && b == 0.0)) {
            throw std::domain_error("ConfDist: beta parameters must be nonnegative, not both zero");
        }
        if (a == 0.0) return point_mass(0.0);
        if (b == 0.0) return point_mass(1.0);
        return ConfDist{DistKind::beta, a, b};
    }

    static ConfDist gamma_dist(double shape, double scale) {
        if (std::isnan(shape) || shape < 0.0) {
            throw std::domain_error("ConfDist: gamma shape must be nonnegative");
        }
        if (shape == 0.0) return point_mass(0.0);
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw std::domain_error("ConfDist: gamma scale must be positive and finite");
        }
        return ConfDist{DistKind::gamma, shape, scale};
    }

    static ConfDist point_mass(double v) {
        if (!std::isfinite(v)) throw std::domain_error("ConfDist: point mass must be finite");
        return ConfDist{DistKind::point_mass, v, 0.0};
    }

    bool is_point_mass() const { return kind == DistKind::point_mass; }

    friend bool operator==(const ConfDist&, const ConfDist&) = default;
};

inline double cdf(const ConfDist& d, double x) {
    switch (d.kind) {
        case DistKind::beta:
            return reg_inc_beta(d.a, d.b, x);
        case DistKind::gamma:
            return x <= 0.0 ? 0.0 : reg_inc_gamma(d.a, x / d.b);
        case DistKind::point_mass:
            return x < d.a ? 0.0 : 1.0;
    }
    throw std::domain_error("cdf: malformed distribution");
}

// Exact p-th quantile, 0 < p < 1. A point mass returns its value for all p.
inline double quantile(const ConfDist& d, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile: p must be in (0, 1)");
    switch (d.kind) {
        case DistKind::beta:
            return inv_reg_inc_beta(d.a, d.b, p);
        case DistKind::gamma:
            return d.b * inv_reg_inc_gamma(d.a, p);
        case DistKind::point_mass:
            return d.a;
    }
    throw std::domain_error("quantile: malformed distribution");
}

namespace detail {

// Relative accuracy for sampled variates; orders of magnitude below the
// Monte Carlo resolution they feed while keeping the guided walk to a
// couple of CDF evaluations per draw.
inline constexpr double kDrawTol = 1e-8;

}  // namespace detail

// m independent variates from d, deterministic given the stream. Variates
// are the inverse-CDF transform of the stream's uniforms, so with a shared
// seed they are pointwise monotone in any stochastic-ordering shift of d.
inline std::vector<double> draw(const ConfDist& d, std::size_t m, RngStream rng) {
    if (m < 1) throw std::domain_error("draw: sample count must be >= 1");
    std::vector<double> out(m);
    if (d.kind == DistKind::point_mass) {
        std::fill(out.begin(), out.end(), d.a);
        return out;
    }
    CounterRng r(rng);
    std::vector<double> u(m);
    for (auto& v : u) v = r.next_unit();
    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&u](std::uint32_t i, std::uint32_t j) { return u[i] < u[j]; });
    // Walk the sorted uniforms; each inversion starts from the previous
    // quantile, which is also a valid lower bracket. Normalizing constants
    // are hoisted out of the loop.
    if (d.kind == DistKind::beta) {
        const double a = d.a, b = d.b;
        const double ln_norm = log_beta(a, b);
        const auto cdf_fn = [a, b, ln_norm](double x) {
            return detail::reg_inc_beta_pre(a, b, x, ln_norm);
        };
        const auto pdf_fn = [a, b, ln_norm](double x) {
            if (x <= 0.0 || x >= 1.0) return 0.0;
            return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - ln_norm);
        };
        double prev = 0.0;
        double start = a / (a + b);
        for (std::size_t k = 0; k < m; ++k) {
            const std::uint32_t i = order[k];
            prev = detail::invert_cdf(cdf_fn, pdf_fn, u[i], prev, 1.0, start, detail::kDrawTol);
            start = prev;
            out[i] = prev;
        }
    } else {
        const double shape = d.a, scale = d.b;
        const double ln_gamma_shape = std::lgamma(shape);
        const auto cdf_fn = [shape, ln_gamma_shape](double t) {
            return detail::reg_inc_gamma_pre(shape, t, ln_gamma_shape);
        };
        const auto pdf_fn = [shape, ln_gamma_shape](double t) {
            if (t <= 0.0) return 0.0;
            return std::exp((shape - 1.0) * std::log(t) - t - ln_gamma_shape);
        };
        double prev = 0.0;
        double start = shape;
        for (std::size_t k = 0; k < m; ++k) {
            const std::uint32_t i = order[k];
            prev = detail::invert_cdf(cdf_fn, pdf_fn, u[i], prev,
                                      std::numeric_limits<double>::infinity(), start,
                                      detail::kDrawTol);
            start = prev;
            out[i] = prev;
        }
        for (auto& v : out) v *= scale;
    }
    return out;
}

// Order statistic at 1-based index ceil(p * n) of the sorted values. The
// product carries a small downward guard so that an exactly-integer p * n
// is not pushed to the next index by floating-point noise.
inline double empirical_quantile_inplace(std::vector<double>& xs, double p) {
    if (xs.empty()) throw std::domain_error("empirical_quantile: empty sample");
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("empirical_quantile: p must be in (0, 1)");
    const auto n = xs.size();
    auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k - 1), xs.end());
    return xs[k - 1];
}

inline double empirical_quantile(std::span<const double> xs, double p) {
    std::vector<double> tmp(xs.begin(), xs.end());
    return empirical_quantile_inplace(tmp, p);
}

// Binomial(n, theta) draw; one uniform per trial.
inline std::int64_t binom_draw(std::int64_t n, double theta, RngStream rng) {
    if (n < 0) throw std::domain_error("binom_draw: n must be >= 0");
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw std::domain_error("binom_draw: theta must be in [0, 1]");
    }
    CounterRng r(rng);
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (r.next_unit() < theta) ++count;
    }
    return count;
}

}  // namespace prevci

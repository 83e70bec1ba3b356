#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace prevci {

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

inline constexpr double kTiny = 1e-300;
inline constexpr double kCfEps = 3e-16;
inline constexpr int kCfMaxIter = 20000;

// Continued fraction for the regularized incomplete beta function,
// evaluated with the modified Lentz algorithm.
inline double beta_cont_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kCfMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kCfEps) return h;
    }
    throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

namespace detail {

// Core of I_x(a, b) with the log normalizing constant precomputed; lets
// batch callers amortize the three lgamma evaluations.
inline double reg_inc_beta_pre(double a, double b, double x, double ln_norm) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(a * std::log(x) + b * std::log1p(-x) - ln_norm);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * beta_cont_fraction(a, b, x) / a;
    }
    return 1.0 - bt * beta_cont_fraction(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b) for a > 0, b > 0.
inline double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || std::isnan(x)) {
        throw std::domain_error("reg_inc_beta: requires a > 0, b > 0 and finite x");
    }
    return detail::reg_inc_beta_pre(a, b, x, log_beta(a, b));
}

// log density of Beta(a, b) at x in (0, 1).
inline double beta_log_pdf(double a, double b, double x) {
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b);
}

namespace detail {

// Core of P(a, x) with lgamma(a) precomputed.
inline double reg_inc_gamma_pre(double a, double x, double ln_gamma_a) {
    if (x <= 0.0) return 0.0;
    const double ln_pre = -x + a * std::log(x) - ln_gamma_a;
    if (x < a + 1.0) {
        // series expansion of P
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 1; n <= detail::kCfMaxIter; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-17) {
                return sum * std::exp(ln_pre);
            }
        }
        throw std::runtime_error("incomplete gamma: series did not converge");
    }
    // continued fraction for Q = 1 - P
    double b = x + 1.0 - a;
    double c = 1.0 / detail::kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= detail::kCfMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < detail::kTiny) d = detail::kTiny;
        c = b + an / c;
        if (std::fabs(c) < detail::kTiny) c = detail::kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kCfEps) {
            return 1.0 - std::exp(ln_pre) * h;
        }
    }
    throw std::runtime_error("incomplete gamma: continued fraction did not converge");
}

}  // namespace detail

// Regularized lower incomplete gamma function P(a, x) for a > 0.
inline double reg_inc_gamma(double a, double x) {
    if (!(a > 0.0) || std::isnan(x)) {
        throw std::domain_error("reg_inc_gamma: requires a > 0 and finite x");
    }
    return detail::reg_inc_gamma_pre(a, x, std::lgamma(a));
}

// log density of Gamma(shape, 1) at t > 0.
inline double gamma_log_pdf_unit(double shape, double t) {
    return (shape - 1.0) * std::log(t) - t - std::lgamma(shape);
}

namespace detail {

// Safeguarded Newton inversion of a monotone CDF. `lo`/`hi` bracket the
// root (cdf(lo) <= p, hi may be +infinity), `x0` is a starting point with
// lo <= x0 < hi. Converges to xtol_rel relative accuracy in x; the default
// is ~1 ulp.
template <class Cdf, class Pdf>
double invert_cdf(Cdf cdf, Pdf pdf, double p, double lo, double hi, double x0,
                  double xtol_rel = 4e-16) {
    double x = x0;
    if (!(x >= lo) || !(x < hi)) {
        x = std::isinf(hi) ? lo + 1.0 : 0.5 * (lo + hi);
    }
    for (int it = 0; it < 256; ++it) {
        const double f = cdf(x) - p;
        if (f == 0.0) return x;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        double next = std::numeric_limits<double>::quiet_NaN();
        const double d = pdf(x);
        if (d > 0.0 && std::isfinite(d)) next = x - f / d;
        if (!(next > lo) || !(next < hi)) {
            next = std::isinf(hi) ? std::max(2.0 * x, x + 1.0) : 0.5 * (lo + hi);
        }
        if (std::fabs(next - x) <= xtol_rel * std::fabs(next) + 1e-300) return next;
        if (!std::isinf(hi) && hi - lo <= xtol_rel * std::fabs(hi) + 1e-300) return 0.5 * (lo + hi);
        x = next;
    }
    return x;
}

}  // namespace detail

// Quantile of Beta(a, b) for a > 0, b > 0, 0 < p < 1.
// Accurate to better than 1e-12 relative error away from fully degenerate
// parameter corners.
inline double inv_reg_inc_beta(double a, double b, double p, double lo_hint = 0.0,
                               double guess = -1.0, double xtol_rel = 4e-16) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inv_reg_inc_beta: p must be in (0, 1)");
    const double mean = a / (a + b);
    double x0 = (guess > 0.0 && guess < 1.0) ? guess : mean;
    if (!(x0 > lo_hint)) x0 = lo_hint;
    const double ln_norm = log_beta(a, b);
    return detail::invert_cdf(
        [a, b, ln_norm](double x) { return detail::reg_inc_beta_pre(a, b, x, ln_norm); },
        [a, b, ln_norm](double x) {
            if (x <= 0.0 || x >= 1.0) return 0.0;
            return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - ln_norm);
        },
        p, lo_hint, 1.0, x0, xtol_rel);
}

// Quantile of Gamma(shape, 1) for shape > 0, 0 < p < 1.
inline double inv_reg_inc_gamma(double shape, double p, double lo_hint = 0.0,
                                double guess = -1.0, double xtol_rel = 4e-16) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inv_reg_inc_gamma: p must be in (0, 1)");
    double x0 = guess;
    if (!(x0 > 0.0)) {
        // Wilson-Hilferty start, with a crude fallback for small shapes
        const double z = p - 0.5;  // sign only; refined by the solver
        const double t = 1.0 - 1.0 / (9.0 * shape) + (z > 0 ? 1.0 : -1.0) * 0.3 / std::sqrt(shape);
        x0 = shape * t * t * t;
        if (!(x0 > 0.0) || !std::isfinite(x0)) x0 = shape;
    }
    if (!(x0 > lo_hint)) x0 = lo_hint + shape * 1e-8 + 1e-12;
    const double ln_gamma_shape = std::lgamma(shape);
    return detail::invert_cdf(
        [shape, ln_gamma_shape](double t) {
            return detail::reg_inc_gamma_pre(shape, t, ln_gamma_shape);
        },
        [shape, ln_gamma_shape](double t) {
            if (t <= 0.0) return 0.0;
            return std::exp((shape - 1.0) * std::log(t) - t - ln_gamma_shape);
        },
        p, lo_hint, std::numeric_limits<double>::infinity(), x0, xtol_rel);
}

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Standard normal quantile, solved to machine accuracy from erfc. The root
// find runs in the lower tail (where erfc keeps full relative precision)
// and reflects, which also makes the result exactly antisymmetric.
inline double inv_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inv_normal_cdf: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    const double q = std::min(p, 1.0 - p);  // exact for p in [0.5, 1]
    constexpr double inv_sqrt_2pi = 0.3989422804014326779;
    double lo = -42.0, hi = 0.0, x = -1.0;
    for (int it = 0; it < 128; ++it) {
        const double f = normal_cdf(x) - q;
        if (f == 0.0) break;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        double next = x - f / (inv_sqrt_2pi * std::exp(-0.5 * x * x));
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) <= 4e-16 * std::fabs(next)) {
            x = next;
            break;
        }
        x = next;
    }
    return p < 0.5 ? x : -x;
}

}  // namespace prevci

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "prevci/confidence_distributions.hpp"
#include "prevci/errors.hpp"
#include "prevci/estimators.hpp"

namespace prevci {

enum class Method {
    clopper_pearson,
    meld_srs,
    lang_reiczigel,
    ws_poisson,
    dpac,
    korn_graubard,
    wprev_poisson,
    wprev_binomial,
};

inline constexpr Method kAllMethods[] = {
    Method::clopper_pearson, Method::meld_srs,      Method::lang_reiczigel,
    Method::ws_poisson,      Method::dpac,          Method::korn_graubard,
    Method::wprev_poisson,   Method::wprev_binomial,
};

inline std::string_view method_tag(Method m) {
    switch (m) {
        case Method::clopper_pearson: return "cp";
        case Method::meld_srs: return "meld-srs";
        case Method::lang_reiczigel: return "lr";
        case Method::ws_poisson: return "wspoisson";
        case Method::dpac: return "dpac";
        case Method::korn_graubard: return "kg";
        case Method::wprev_poisson: return "wprev-poisson";
        case Method::wprev_binomial: return "wprev-binomial";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view tag) {
    for (Method m : kAllMethods) {
        if (method_tag(m) == tag) return m;
    }
    return std::nullopt;
}

// True when the method draws Monte Carlo samples and therefore needs a seed.
inline bool method_uses_mc(Method m) {
    return m == Method::meld_srs || m == Method::wprev_poisson || m == Method::wprev_binomial;
}

// True when the method adjusts for assay sensitivity/specificity.
inline bool method_uses_calibration(Method m) {
    return m == Method::meld_srs || m == Method::lang_reiczigel ||
           m == Method::wprev_poisson || m == Method::wprev_binomial;
}

// True when the method is defined only for a simple random sample (K = 1).
inline bool method_requires_srs(Method m) {
    return m == Method::clopper_pearson || m == Method::meld_srs ||
           m == Method::lang_reiczigel;
}

struct MCConfig {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 0;
};

inline void validate(const MCConfig& mc) {
    if (mc.samples < 1000) throw std::domain_error("MCConfig: needs at least 1000 samples");
}

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
    double alpha = 0.05;
    Method method = Method::clopper_pearson;
    std::uint64_t mc_samples = 0;  // 0 for closed-form methods
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must be in (0, 1)");
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

inline constexpr std::uint64_t kMeldStreamLabel = 0x4D454C44ull;  // melding draws

// One melded bound: the prob-quantile of the misclassification correction
// applied elementwise to independent draws from the three component
// distributions. Prevalence draws are clamped at 1 before the correction
// (only gamma components can exceed it). Each (bound, component) pair owns
// its stream, so lower/upper batches are independent and results do not
// depend on evaluation order.
inline double melded_quantile(const ConfDist& prev_cd, const ConfDist& phi_n_cd,
                              const ConfDist& phi_p_cd, double prob, const MCConfig& mc,
                              std::uint64_t bound) {
    const std::size_t m = static_cast<std::size_t>(mc.samples);
    auto vals = draw(prev_cd, m, RngStream{mc.seed, derive_stream(kMeldStreamLabel, bound, 0)});
    const auto fn = draw(phi_n_cd, m, RngStream{mc.seed, derive_stream(kMeldStreamLabel, bound, 1)});
    const auto fp = draw(phi_p_cd, m, RngStream{mc.seed, derive_stream(kMeldStreamLabel, bound, 2)});
    for (std::size_t i = 0; i < m; ++i) {
        vals[i] = rogan_gladen(std::min(vals[i], 1.0), fn[i], fp[i]);
    }
    return empirical_quantile_inplace(vals, prob);
}

inline Interval melded_interval(Method method, const ConfDist& prev_lower,
                                const ConfDist& prev_upper, const AssayCalibration& a,
                                double alpha, const MCConfig& mc) {
    check_alpha(alpha);
    validate(a);
    validate(mc);
    const ConfDist phi_n_lower = binom_lower_cd({a.c_n, a.m_n});
    const ConfDist phi_n_upper = binom_upper_cd({a.c_n, a.m_n});
    const ConfDist phi_p_lower = binom_lower_cd({a.c_p, a.m_p});
    const ConfDist phi_p_upper = binom_upper_cd({a.c_p, a.m_p});
    Interval out;
    out.method = method;
    out.alpha = alpha;
    out.mc_samples = mc.samples;
    out.seed = mc.seed;
    out.lower = melded_quantile(prev_lower, phi_n_upper, phi_p_upper, alpha / 2.0, mc, 0);
    out.upper = melded_quantile(prev_upper, phi_n_lower, phi_p_lower, 1.0 - alpha / 2.0, mc, 1);
    out.lower = clamp01(out.lower);
    out.upper = clamp01(out.upper);
    return out;
}

}  // namespace detail

// Exact central binomial interval from the beta quantiles of the lower and
// upper confidence distributions.
inline Interval clopper_pearson(const BinomialCount& c, double alpha) {
    detail::check_alpha(alpha);
    Interval out;
    out.method = Method::clopper_pearson;
    out.alpha = alpha;
    out.lower = quantile(binom_lower_cd(c), alpha / 2.0);
    out.upper = quantile(binom_upper_cd(c), 1.0 - alpha / 2.0);
    return out;
}

// Melded interval for true prevalence from a simple random sample tested
// with an imperfect assay. The lower bound melds the lower prevalence
// distribution with the upper assay-error distributions; the upper bound
// swaps the roles.
inline Interval meld_srs_sesp(const BinomialCount& c, const AssayCalibration& a, double alpha,
                              const MCConfig& mc) {
    validate(c);
    return detail::melded_interval(Method::meld_srs, binom_lower_cd(c), binom_upper_cd(c), a,
                                   alpha, mc);
}

struct LangReiczigelOptions {
    // Reproduce the (1 + prevalence)^2 coefficient on the specificity
    // variance term as sometimes printed; the default uses the
    // (1 - prevalence)^2 complement form.
    bool literal_variance = false;
};

// Adjusted Wald interval for true prevalence from a simple random sample,
// with +2/+1 style corrections on the prevalence and calibration counts.
inline Interval lang_reiczigel(const BinomialCount& c, const AssayCalibration& a, double alpha,
                               const LangReiczigelOptions& opts = {}) {
    validate(c);
    validate(a);
    detail::check_alpha(alpha);
    const double q = inv_normal_cdf(1.0 - alpha / 2.0);
    const double n1 = static_cast<double>(c.n);
    const double theta_hat = static_cast<double>(c.x) / n1;
    const double mp = static_cast<double>(a.m_p);
    const double mn = static_cast<double>(a.m_n);
    const double mp_adj = mp + 2.0;
    const double mn_adj = mn + 2.0;
    const double phi_p = (mp * a.phi_p_hat() + 1.0) / mp_adj;
    const double phi_n = (mn * a.phi_n_hat() + 1.0) / mn_adj;
    if (!(phi_p > phi_n)) {
        throw InfeasibleError("lang_reiczigel: degenerate assay (adjusted sensitivity must "
                              "exceed adjusted false-positive rate)");
    }
    const double beta1 = (n1 * theta_hat + q * q / 2.0) / (n1 + q * q);
    const double prev = (beta1 - phi_n) / (phi_p - phi_n);
    const double d_beta = 2.0 * q * q *
                          (prev * phi_p * (1.0 - phi_p) / mp_adj -
                           (1.0 - prev) * (1.0 - phi_n) * phi_n / mn_adj);
    const double spec_coef = opts.literal_variance ? (1.0 + prev) * (1.0 + prev)
                                                   : (1.0 - prev) * (1.0 - prev);
    double var = (prev * (1.0 - prev) / n1 + prev * prev * phi_p * (1.0 - phi_p) / mp +
                  spec_coef * (1.0 - phi_n) * phi_n / mn) /
                 ((phi_p - phi_n) * (phi_p - phi_n));
    Interval out;
    out.method = Method::lang_reiczigel;
    out.alpha = alpha;
    if (var < 0.0) {
        var = 0.0;
        out.warnings.emplace_back("variance clamped at zero");
    }
    if (opts.literal_variance) out.warnings.emplace_back("literal variance form");
    const double half = q * std::sqrt(var);
    out.lower = detail::clamp01(prev + d_beta - half);
    out.upper = detail::clamp01(prev + d_beta + half);
    return out;
}

// Gamma interval for the prevalence of a weighted sample with a perfect
// assay, from the moment-matched gamma confidence distributions.
inline Interval ws_poisson_interval(const StratifiedSample& s, double alpha) {
    detail::check_alpha(alpha);
    const auto [lower_cd, upper_cd] = ws_poisson_cds(s);
    Interval out;
    out.method = Method::ws_poisson;
    out.alpha = alpha;
    out.lower = detail::clamp01(quantile(lower_cd, alpha / 2.0));
    out.upper = detail::clamp01(quantile(upper_cd, 1.0 - alpha / 2.0));
    return out;
}

// Survey adaptation of the Agresti-Coull interval on the effective sample
// size.
inline Interval dpac_interval(const StratifiedSample& s, double alpha) {
    detail::check_alpha(alpha);
    const double q = inv_normal_cdf(1.0 - alpha / 2.0);
    const KgEffective e = kg_effective(s);
    const double p_bar = apparent_prevalence(s);
    const double c = q * q / 2.0;
    const double x_tilde = p_bar * e.n_eff + c;
    const double n_tilde = e.n_eff + 2.0 * c;
    const double p_tilde = x_tilde / n_tilde;
    const double half = q * std::sqrt(p_tilde * (1.0 - p_tilde) / n_tilde);
    Interval out;
    out.method = Method::dpac;
    out.alpha = alpha;
    out.lower = detail::clamp01(p_tilde - half);
    out.upper = detail::clamp01(p_tilde + half);
    return out;
}

// Survey analogue of the Clopper-Pearson interval on the effective counts.
inline Interval kg_interval(const StratifiedSample& s, double alpha) {
    detail::check_alpha(alpha);
    bool degenerate = false;
    const auto [lower_cd, upper_cd] = kg_cds(s, &degenerate);
    Interval out;
    out.method = Method::korn_graubard;
    out.alpha = alpha;
    if (degenerate) out.warnings.emplace_back("degenerate effective sample size; interval is [0, 1]");
    out.lower = detail::clamp01(quantile(lower_cd, alpha / 2.0));
    out.upper = detail::clamp01(quantile(upper_cd, 1.0 - alpha / 2.0));
    return out;
}

// Melded interval for a weighted sample and an imperfect assay, with the
// prevalence confidence distributions taken from the weighted-sum-of-
// Poissons gammas.
inline Interval wprev_sesp_poisson(const StratifiedSample& s, const AssayCalibration& a,
                                   double alpha, const MCConfig& mc) {
    const auto [lower_cd, upper_cd] = ws_poisson_cds(s);
    return detail::melded_interval(Method::wprev_poisson, lower_cd, upper_cd, a, alpha, mc);
}

// Same melding recipe with the effective-count beta distributions supplying
// the prevalence component.
inline Interval wprev_sesp_binomial(const StratifiedSample& s, const AssayCalibration& a,
                                    double alpha, const MCConfig& mc) {
    bool degenerate = false;
    const auto [lower_cd, upper_cd] = kg_cds(s, &degenerate);
    Interval out = detail::melded_interval(Method::wprev_binomial, lower_cd, upper_cd, a, alpha, mc);
    if (degenerate) out.warnings.emplace_back("degenerate effective sample size; interval is [0, 1]");
    return out;
}

}  // namespace prevci

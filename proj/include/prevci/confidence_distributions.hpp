#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prevci/distributions.hpp"

namespace prevci {

// x successes out of n trials.
struct BinomialCount {
    std::int64_t x = 0;
    std::int64_t n = 0;
};

inline void validate(const BinomialCount& c) {
    if (c.n < 1 || c.x < 0 || c.x > c.n) {
        throw std::domain_error("BinomialCount: requires 0 <= x <= n and n >= 1");
    }
}

// One sampling stratum: normalized weight, sample size, positive count.
struct Stratum {
    double weight = 0.0;
    std::int64_t n = 0;
    std::int64_t x = 0;

    double theta_hat() const { return static_cast<double>(x) / static_cast<double>(n); }
};

struct StratifiedSample {
    std::vector<Stratum> strata;
};

inline constexpr double kWeightSumExactTol = 1e-9;
inline constexpr double kWeightSumRenormTol = 1e-6;

// Validates counts and the unit weight sum. Weight sums within the
// renormalization tolerance are rescaled to sum exactly 1 (reported through
// `renormalized` when the deviation exceeds the exact tolerance); larger
// deviations are rejected.
inline StratifiedSample make_stratified_sample(std::vector<Stratum> strata,
                                               bool* renormalized = nullptr) {
    if (strata.empty()) throw std::domain_error("StratifiedSample: needs at least one stratum");
    double sum = 0.0;
    for (const auto& s : strata) {
        if (!(s.weight > 0.0) || !std::isfinite(s.weight)) {
            throw std::domain_error("StratifiedSample: weights must be positive and finite");
        }
        if (s.n < 1 || s.x < 0 || s.x > s.n) {
            throw std::domain_error("StratifiedSample: requires 0 <= x <= n and n >= 1");
        }
        sum += s.weight;
    }
    const double dev = std::fabs(sum - 1.0);
    if (dev > kWeightSumRenormTol * std::max(1.0, sum)) {
        throw std::domain_error("StratifiedSample: weights must sum to 1 (got " +
                                std::to_string(sum) + ")");
    }
    if (renormalized) *renormalized = dev > kWeightSumExactTol;
    for (auto& s : strata) s.weight /= sum;
    return StratifiedSample{std::move(strata)};
}

// Lower confidence distribution of a binomial proportion: Beta(x, n - x + 1),
// a point mass at 0 when x = 0.
inline ConfDist binom_lower_cd(const BinomialCount& c) {
    validate(c);
    return ConfDist::beta_dist(static_cast<double>(c.x), static_cast<double>(c.n - c.x + 1));
}

// Upper confidence distribution: Beta(x + 1, n - x), a point mass at 1 when
// x = n.
inline ConfDist binom_upper_cd(const BinomialCount& c) {
    validate(c);
    return ConfDist::beta_dist(static_cast<double>(c.x + 1), static_cast<double>(c.n - c.x));
}

// First two moments of the weighted positive-count sum, plus the bumped
// (y*, v*) pair that gives the upper gamma distribution its continuity
// correction.
struct WsMoments {
    double y = 0.0;
    double v = 0.0;
    double y_star = 0.0;
    double v_star = 0.0;
};

inline WsMoments ws_moments(const StratifiedSample& s) {
    WsMoments m;
    double max_ratio = 0.0;
    for (const auto& st : s.strata) {
        const double ratio = st.weight / static_cast<double>(st.n);
        m.y += ratio * static_cast<double>(st.x);
        m.v += ratio * ratio * static_cast<double>(st.x);
        max_ratio = std::max(max_ratio, ratio);
    }
    m.y_star = m.y + max_ratio;
    m.v_star = m.v + max_ratio * max_ratio;
    return m;
}

// Gamma confidence distributions for a weighted sum of Poisson means,
// moment-matched to (y, v) below and (y*, v*) above. The lower distribution
// is a point mass at 0 when no events were observed.
inline std::pair<ConfDist, ConfDist> ws_poisson_cds(const StratifiedSample& s) {
    const WsMoments m = ws_moments(s);
    ConfDist lower = m.y > 0.0 ? ConfDist::gamma_dist(m.y * m.y / m.v, m.v / m.y)
                               : ConfDist::point_mass(0.0);
    ConfDist upper = ConfDist::gamma_dist(m.y_star * m.y_star / m.v_star, m.v_star / m.y_star);
    return {lower, upper};
}

// Effective sample size and effective count for survey proportions. When the
// variance denominator vanishes (all counts zero), the effective size falls
// back to the total sample size.
struct KgEffective {
    double n_eff = 0.0;
    double x_eff = 0.0;
};

inline KgEffective kg_effective(const StratifiedSample& s) {
    double p_bar = 0.0;
    double denom = 0.0;
    double n_total = 0.0;
    for (const auto& st : s.strata) {
        p_bar += st.weight * st.theta_hat();
        denom += st.weight * st.weight / static_cast<double>(st.n) * st.theta_hat();
        n_total += static_cast<double>(st.n);
    }
    KgEffective e;
    e.n_eff = denom > 0.0 ? p_bar * (1.0 - p_bar) / denom : n_total;
    e.x_eff = e.n_eff * p_bar;
    return e;
}

// Beta confidence distributions on the effective counts, mirroring the
// Clopper-Pearson construction. The fully degenerate corner (every subject
// positive, so n_eff = x_eff = 0) widens to point masses at 0 and 1;
// `degenerate` reports it.
inline std::pair<ConfDist, ConfDist> kg_cds(const StratifiedSample& s,
                                            bool* degenerate = nullptr) {
    const KgEffective e = kg_effective(s);
    if (degenerate) *degenerate = false;
    if (e.n_eff <= 0.0) {
        if (degenerate) *degenerate = true;
        return {ConfDist::point_mass(0.0), ConfDist::point_mass(1.0)};
    }
    ConfDist lower = ConfDist::beta_dist(e.x_eff, e.n_eff - e.x_eff + 1.0);
    ConfDist upper = ConfDist::beta_dist(e.x_eff + 1.0, e.n_eff - e.x_eff);
    return {lower, upper};
}

}  // namespace prevci

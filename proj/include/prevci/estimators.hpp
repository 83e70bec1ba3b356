#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "prevci/confidence_distributions.hpp"

namespace prevci {

// Control-sample counts for assay calibration: c_n positives among m_n
// negative controls (estimating the false-positive rate phi_n, 1 minus
// specificity) and c_p positives among m_p positive controls (estimating
// the sensitivity phi_p).
struct AssayCalibration {
    std::int64_t c_n = 0;
    std::int64_t m_n = 0;
    std::int64_t c_p = 0;
    std::int64_t m_p = 0;

    double phi_n_hat() const { return static_cast<double>(c_n) / static_cast<double>(m_n); }
    double phi_p_hat() const { return static_cast<double>(c_p) / static_cast<double>(m_p); }
};

inline void validate(const AssayCalibration& a) {
    if (a.m_n < 1 || a.m_p < 1 || a.c_n < 0 || a.c_n > a.m_n || a.c_p < 0 || a.c_p > a.m_p) {
        throw std::domain_error("AssayCalibration: requires 0 <= c <= m and m >= 1 for both arms");
    }
}

// Misclassification-corrected prevalence (clamped Rogan-Gladen map):
//
//   1                                      if phi_n < phi_p < theta
//   (theta - phi_n) / (phi_p - phi_n)      if phi_p >= theta >= phi_n
//   0                                      otherwise,
//
// with 0/0 defined as 0. Total on the unit cube, range [0, 1], and
// non-decreasing in theta / non-increasing in phi_n everywhere. It is not
// monotone in phi_p when phi_n < theta: there the value jumps from 0 to 1
// as phi_p crosses phi_n from below and then decays.
inline double rogan_gladen(double theta_hat, double phi_n_hat, double phi_p_hat) {
    if (!(theta_hat >= 0.0 && theta_hat <= 1.0) || !(phi_n_hat >= 0.0 && phi_n_hat <= 1.0) ||
        !(phi_p_hat >= 0.0 && phi_p_hat <= 1.0)) {
        throw std::domain_error("rogan_gladen: inputs must lie in [0, 1]");
    }
    if (phi_n_hat < phi_p_hat && phi_p_hat < theta_hat) return 1.0;
    if (phi_p_hat >= theta_hat && theta_hat >= phi_n_hat) {
        const double num = theta_hat - phi_n_hat;
        const double den = phi_p_hat - phi_n_hat;
        if (num == 0.0) return 0.0;  // covers 0/0
        return num / den;
    }
    return 0.0;
}

// Weighted positive fraction sum(w_i * x_i / n_i).
inline double apparent_prevalence(const StratifiedSample& s) {
    double acc = 0.0;
    for (const auto& st : s.strata) acc += st.weight * st.theta_hat();
    return acc;
}

struct PrevalenceEstimate {
    double apparent = 0.0;
    double corrected = 0.0;
    std::string method;
};

// Plug-in estimator of true prevalence: the apparent prevalence pushed
// through the misclassification correction at the estimated assay rates.
inline PrevalenceEstimate beta_star_plugin(const StratifiedSample& s, const AssayCalibration& a) {
    validate(a);
    const double apparent = apparent_prevalence(s);
    return PrevalenceEstimate{apparent, rogan_gladen(apparent, a.phi_n_hat(), a.phi_p_hat()),
                              "plugin"};
}

}  // namespace prevci

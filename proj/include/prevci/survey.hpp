#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "prevci/confidence_distributions.hpp"

namespace prevci {

// Per-individual survey input: binary outcomes plus either raw sampling
// weights (any positive scale) or with-replacement selection probabilities
// together with the population size.
struct SurveyFrame {
    enum class WeightMode { raw, selection_prob };

    WeightMode mode = WeightMode::raw;
    std::vector<int> outcomes;      // y_i in {0, 1}
    std::vector<double> weights;    // raw weights, or selection probabilities p_i
    std::int64_t population_size = 0;  // N; required in selection_prob mode

    std::size_t sample_size() const { return outcomes.size(); }
};

inline void validate(const SurveyFrame& f) {
    if (f.outcomes.empty()) throw std::domain_error("SurveyFrame: needs at least one record");
    if (f.outcomes.size() != f.weights.size()) {
        throw std::domain_error("SurveyFrame: outcomes and weights must have equal length");
    }
    for (int y : f.outcomes) {
        if (y != 0 && y != 1) throw std::domain_error("SurveyFrame: outcomes must be 0 or 1");
    }
    for (double w : f.weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw std::domain_error("SurveyFrame: weights/probabilities must be positive and finite");
        }
        if (f.mode == SurveyFrame::WeightMode::selection_prob && w > 1.0) {
            throw std::domain_error("SurveyFrame: selection probabilities must be in (0, 1]");
        }
    }
    if (f.mode == SurveyFrame::WeightMode::selection_prob && f.population_size < 1) {
        throw std::domain_error("SurveyFrame: population size N required with selection probabilities");
    }
}

namespace detail {

// Expectation-1 weights before normalization: 1/(n N p_i) in probability
// mode, the raw weights otherwise.
inline std::vector<double> unit_scale_weights(const SurveyFrame& f, double* sum_out = nullptr) {
    const double n = static_cast<double>(f.sample_size());
    std::vector<double> w(f.weights.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = f.mode == SurveyFrame::WeightMode::selection_prob
                   ? 1.0 / (n * static_cast<double>(f.population_size) * f.weights[i])
                   : f.weights[i];
        sum += w[i];
    }
    if (sum_out) *sum_out = sum;
    return w;
}

}  // namespace detail

// Maps the frame to one stratum per individual (n_i = 1, x_i = y_i) with
// weights rescaled to sum exactly 1.
inline StratifiedSample normalized_weights(const SurveyFrame& f) {
    validate(f);
    double sum = 0.0;
    const auto w = detail::unit_scale_weights(f, &sum);
    std::vector<Stratum> strata(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        strata[i] = Stratum{w[i] / sum, 1, f.outcomes[i]};
    }
    return StratifiedSample{std::move(strata)};
}

// Unbiased prevalence estimator under the with-replacement multinomial
// model: (1/n) sum y_i / (N p_i); with raw weights, the weighted positive
// fraction.
inline double beta_hat_multinomial(const SurveyFrame& f) {
    validate(f);
    if (f.mode == SurveyFrame::WeightMode::selection_prob) {
        const double n = static_cast<double>(f.sample_size());
        const double N = static_cast<double>(f.population_size);
        double acc = 0.0;
        for (std::size_t i = 0; i < f.outcomes.size(); ++i) {
            if (f.outcomes[i]) acc += 1.0 / (N * f.weights[i]);
        }
        return acc / n;
    }
    double acc = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < f.outcomes.size(); ++i) {
        acc += f.weights[i] * f.outcomes[i];
        sum += f.weights[i];
    }
    return acc / sum;
}

// Variance estimator under the multinomial model:
// (1/(n(n-1))) sum (y_i/(N p_i) - beta_hat)^2.
inline double var_multinomial(const SurveyFrame& f) {
    validate(f);
    const double n = static_cast<double>(f.sample_size());
    if (f.sample_size() < 2) {
        throw std::domain_error("var_multinomial: needs at least two records");
    }
    const double beta_hat = beta_hat_multinomial(f);
    double sum_sq = 0.0;
    if (f.mode == SurveyFrame::WeightMode::selection_prob) {
        const double N = static_cast<double>(f.population_size);
        for (std::size_t i = 0; i < f.outcomes.size(); ++i) {
            const double z = f.outcomes[i] ? 1.0 / (N * f.weights[i]) : 0.0;
            sum_sq += (z - beta_hat) * (z - beta_hat);
        }
    } else {
        double w_sum = 0.0;
        for (double w : f.weights) w_sum += w;
        for (std::size_t i = 0; i < f.outcomes.size(); ++i) {
            const double z = n * f.weights[i] / w_sum * f.outcomes[i];
            sum_sq += (z - beta_hat) * (z - beta_hat);
        }
    }
    return sum_sq / (n * (n - 1.0));
}

// Variance estimator under the independent-Poisson model,
// sum y_i / (n^2 N^2 p_i^2), evaluated on the exactly-normalized weight
// scale so it coincides with the v moment of the per-individual stratified
// mapping.
inline double var_poisson(const SurveyFrame& f) {
    validate(f);
    double sum = 0.0;
    const auto w = detail::unit_scale_weights(f, &sum);
    double acc = 0.0;
    if (f.mode == SurveyFrame::WeightMode::selection_prob) {
        const double n = static_cast<double>(f.sample_size());
        const double N = static_cast<double>(f.population_size);
        for (std::size_t i = 0; i < f.outcomes.size(); ++i) {
            if (f.outcomes[i]) {
                const double d = n * N * f.weights[i];
                acc += 1.0 / (d * d);
            }
        }
    } else {
        for (std::size_t i = 0; i < f.outcomes.size(); ++i) {
            if (f.outcomes[i]) acc += w[i] * w[i];
        }
    }
    return acc / (sum * sum);
}

// Diagnostic conversions to the population-count weight scale. The
// traditional weight 1/(n p_i) estimates how many individuals the record
// represents; the scaled variant forces the sum to N. Neither drives any
// interval in this library.
inline std::vector<double> traditional_weights(const SurveyFrame& f) {
    validate(f);
    if (f.mode != SurveyFrame::WeightMode::selection_prob) {
        throw std::domain_error("traditional_weights: defined for selection-probability frames");
    }
    const double n = static_cast<double>(f.sample_size());
    std::vector<double> w(f.weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / (n * f.weights[i]);
    return w;
}

inline std::vector<double> scaled_traditional_weights(const SurveyFrame& f) {
    auto w = traditional_weights(f);
    double sum = 0.0;
    for (double v : w) sum += v;
    const double scale = static_cast<double>(f.population_size) / sum;
    for (double& v : w) v *= scale;
    return w;
}

}  // namespace prevci

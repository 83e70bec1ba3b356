#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "prevci/errors.hpp"
#include "prevci/intervals.hpp"

namespace prevci {

enum class Placement { highest, lowest, uniform };

inline std::string_view placement_tag(Placement p) {
    switch (p) {
        case Placement::highest: return "highest";
        case Placement::lowest: return "lowest";
        case Placement::uniform: return "uniform";
    }
    return "?";
}

inline std::optional<Placement> parse_placement(std::string_view tag) {
    if (tag == "highest") return Placement::highest;
    if (tag == "lowest") return Placement::lowest;
    if (tag == "uniform") return Placement::uniform;
    return std::nullopt;
}

// One simulation configuration: population layout, weight dispersion,
// prevalence placement, assay quality and calibration sizes, and the
// replication plan.
struct ScenarioSpec {
    double prevalence = 0.0;       // true prevalence
    int n_strata = 1;              // K
    std::int64_t stratum_size = 1; // n_i, common to all strata
    double cv_target = 0.0;        // target coefficient of variation of the weights
    double nonzero_fraction = 1.0; // fraction of strata carrying the prevalence
    Placement placement = Placement::highest;
    double sensitivity = 1.0;      // phi_p
    double specificity = 1.0;      // 1 - phi_n
    std::int64_t m_p = 1;          // positive-control tests
    std::int64_t m_n = 1;          // negative-control tests
    double alpha = 0.05;
    std::int64_t replicates = 1000;
    std::uint64_t seed = 0;
    std::uint64_t mc_samples = 10000;
    int weight_sets = 1;           // >1 sweeps a uniform cv grid over [0, cv_target]
    bool placement_random = false; // seeded random subset instead of rank placement
};

struct MethodMetrics {
    double coverage = 0.0;
    double lower_error = 0.0;
    double upper_error = 0.0;
    double mean_width = 0.0;
    double mc_se = 0.0;
    std::int64_t failures = 0;
};

struct SimResult {
    double cv_actual = 0.0;
    double true_prevalence = 0.0;
    std::uint64_t seed = 0;
    std::int64_t replicates = 0;
    std::vector<std::pair<Method, MethodMetrics>> per_method;
    std::vector<std::string> warnings;
};

namespace detail {

inline constexpr std::uint64_t kWeightLabel = 0x57454947ull;     // weight generation
inline constexpr std::uint64_t kPlacementLabel = 0x504C4143ull;  // random placement subset
inline constexpr std::uint64_t kDataLabel = 0x44415441ull;       // per-stratum counts
inline constexpr std::uint64_t kSensLabel = 0x53454E53ull;       // sensitivity controls
inline constexpr std::uint64_t kSpecLabel = 0x53504543ull;       // specificity controls
inline constexpr std::uint64_t kMcLabel = 0x4D435344ull;         // per-method MC seeds
inline constexpr std::uint64_t kSweepLabel = 0x53574550ull;      // per-weight-set seeds

}  // namespace detail

// K weights from the beta construction that targets a coefficient of
// variation v among the normalized weights, normalized to sum 1. v = 0
// yields exactly uniform weights; v^2 >= K - 1 is infeasible.
inline std::vector<double> gen_weights(int k, double v, RngStream rng) {
    if (k < 2) throw std::domain_error("gen_weights: needs at least two strata");
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::domain_error("gen_weights: cv must be >= 0");
    if (v == 0.0) return std::vector<double>(static_cast<std::size_t>(k), 1.0 / k);
    const double kd = static_cast<double>(k);
    const double a = (kd - 1.0 - v * v) / (kd * v * v);
    if (!(a > 0.0)) {
        throw InfeasibleError("gen_weights: coefficient of variation " + std::to_string(v) +
                              " infeasible for " + std::to_string(k) + " strata (needs v^2 < K-1)");
    }
    const double b = (kd - 1.0) * a;
    auto w = draw(ConfDist::beta_dist(a, b), static_cast<std::size_t>(k), rng);
    double sum = 0.0;
    for (double& x : w) {
        x = std::max(x, 1e-290);  // guard against underflow at extreme cv
        sum += x;
    }
    for (double& x : w) x /= sum;
    return w;
}

// Assigns a common prevalence theta = p / (weight of the selected strata) to
// ceil(fraction * K) strata chosen by weight rank (or a seeded random subset),
// zero elsewhere, so that sum w_i theta_i = p.
inline std::vector<double> assign_prevalence(const std::vector<double>& weights, double p,
                                             double fraction, Placement placement,
                                             bool random_subset = false, RngStream rng = {}) {
    const std::size_t k = weights.size();
    if (k == 0) throw std::domain_error("assign_prevalence: empty weights");
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("assign_prevalence: p must be in [0, 1]");
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::domain_error("assign_prevalence: fraction must be in (0, 1]");
    }
    auto s = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(k)));
    s = std::clamp<std::size_t>(s, 1, k);

    std::vector<std::size_t> selected;
    selected.reserve(s);
    if (random_subset) {
        std::vector<std::size_t> pool(k);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        CounterRng r(rng);
        for (std::size_t j = 0; j < s; ++j) {
            const auto pick = j + static_cast<std::size_t>(r.next_u64() % (k - j));
            std::swap(pool[j], pool[pick]);
            selected.push_back(pool[j]);
        }
    } else {
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&weights](std::size_t i, std::size_t j) {
            return weights[i] > weights[j];
        });
        switch (placement) {
            case Placement::highest:
                selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
                break;
            case Placement::lowest:
                selected.assign(order.end() - static_cast<std::ptrdiff_t>(s), order.end());
                break;
            case Placement::uniform:
                // evenly spaced positions in the weight ranking
                for (std::size_t j = 0; j < s; ++j) {
                    const auto pos = static_cast<std::size_t>(
                        (static_cast<double>(j) + 0.5) * static_cast<double>(k) /
                        static_cast<double>(s));
                    selected.push_back(order[std::min(pos, k - 1)]);
                }
                break;
        }
    }

    double sum_selected = 0.0;
    for (std::size_t i : selected) sum_selected += weights[i];
    const double theta = p == 0.0 ? 0.0 : p / sum_selected;
    if (theta > 1.0) {
        throw InfeasibleError("assign_prevalence: target prevalence " + std::to_string(p) +
                              " infeasible for the selected strata (needs theta <= 1)");
    }
    std::vector<double> out(k, 0.0);
    for (std::size_t i : selected) out[i] = theta;
    return out;
}

// Stratum configuration for replicate generation: weight, sample size and
// true prevalence.
struct StratumConfig {
    double weight = 0.0;
    std::int64_t size = 0;
    double theta_star = 0.0;
};

struct ReplicatePlan {
    double sensitivity = 1.0;
    double specificity = 1.0;
    std::int64_t m_p = 1;
    std::int64_t m_n = 1;
    double alpha = 0.05;
    std::int64_t replicates = 1;
    std::uint64_t seed = 0;
    std::uint64_t mc_samples = 10000;
    int threads = 0;  // 0 = hardware concurrency
};

namespace detail {

enum class Outcome : std::uint8_t { covered, lower_error, upper_error, failed };

struct ReplicateCell {
    Outcome outcome = Outcome::failed;
    double width = 0.0;
};

inline Interval dispatch_interval(Method m, const StratifiedSample& sample,
                                  const BinomialCount* srs, const AssayCalibration& cal,
                                  double alpha, const MCConfig& mc) {
    switch (m) {
        case Method::clopper_pearson:
            return clopper_pearson(*srs, alpha);
        case Method::meld_srs:
            return meld_srs_sesp(*srs, cal, alpha, mc);
        case Method::lang_reiczigel:
            return lang_reiczigel(*srs, cal, alpha);
        case Method::ws_poisson:
            return ws_poisson_interval(sample, alpha);
        case Method::dpac:
            return dpac_interval(sample, alpha);
        case Method::korn_graubard:
            return kg_interval(sample, alpha);
        case Method::wprev_poisson:
            return wprev_sesp_poisson(sample, cal, alpha, mc);
        case Method::wprev_binomial:
            return wprev_sesp_binomial(sample, cal, alpha, mc);
    }
    throw std::domain_error("unknown method");
}

}  // namespace detail

// Runs the replicate loop for a fixed stratum configuration. Replicates are
// independent and distributed over threads; every random stream is keyed by
// (seed, replicate, component), and aggregation is a fixed-order sequential
// reduction, so results are bit-identical for any worker count. Strata are
// re-sorted canonically before streaming, which makes all metrics invariant
// under permutations of the input.
inline SimResult run_replicates(std::vector<StratumConfig> strata, const ReplicatePlan& plan,
                                const std::vector<Method>& methods) {
    if (strata.empty()) throw std::domain_error("run_replicates: empty strata");
    if (methods.empty()) throw std::domain_error("run_replicates: no methods requested");
    if (plan.replicates < 1) throw std::domain_error("run_replicates: needs replicates >= 1");
    const double phi_p = plan.sensitivity;
    const double phi_n = 1.0 - plan.specificity;
    if (!(phi_p >= 0.0 && phi_p <= 1.0) || !(phi_n >= 0.0 && phi_n <= 1.0)) {
        throw std::domain_error("run_replicates: sensitivity/specificity must be in [0, 1]");
    }
    const bool srs_only_possible = strata.size() == 1;
    for (Method m : methods) {
        if (method_requires_srs(m) && !srs_only_possible) {
            throw InfeasibleError(std::string(method_tag(m)) +
                                  " requires a simple random sample (one stratum)");
        }
        if (method_uses_mc(m)) validate(MCConfig{plan.mc_samples, 0});
    }

    std::sort(strata.begin(), strata.end(), [](const StratumConfig& a, const StratumConfig& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.theta_star != b.theta_star) return a.theta_star > b.theta_star;
        return a.size > b.size;
    });

    double true_prev = 0.0;
    for (const auto& s : strata) true_prev += s.weight * s.theta_star;

    const auto n_methods = methods.size();
    const auto n_reps = static_cast<std::size_t>(plan.replicates);
    std::vector<detail::ReplicateCell> cells(n_reps * n_methods);
    std::vector<std::string> first_errors(n_methods);

    auto run_one = [&](std::size_t r) {
        std::vector<Stratum> drawn(strata.size());
        for (std::size_t i = 0; i < strata.size(); ++i) {
            const double theta_apparent =
                std::clamp(phi_p * strata[i].theta_star + phi_n * (1.0 - strata[i].theta_star),
                           0.0, 1.0);
            const auto x = binom_draw(strata[i].size, theta_apparent,
                                      RngStream{plan.seed, derive_stream(detail::kDataLabel, r, i)});
            drawn[i] = Stratum{strata[i].weight, strata[i].size, x};
        }
        const AssayCalibration cal{
            binom_draw(plan.m_n, phi_n, RngStream{plan.seed, derive_stream(detail::kSpecLabel, r)}),
            plan.m_n,
            binom_draw(plan.m_p, phi_p, RngStream{plan.seed, derive_stream(detail::kSensLabel, r)}),
            plan.m_p};
        const StratifiedSample sample{drawn};
        BinomialCount srs{};
        if (srs_only_possible) srs = BinomialCount{drawn[0].x, drawn[0].n};

        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            auto& cell = cells[r * n_methods + mi];
            try {
                // keyed by the method id, so adding methods to a run never
                // perturbs another method's draws
                const MCConfig mc{plan.mc_samples,
                                  derive_stream(plan.seed, detail::kMcLabel, r,
                                                static_cast<std::uint64_t>(methods[mi]))};
                const Interval ci =
                    detail::dispatch_interval(methods[mi], sample, &srs, cal, plan.alpha, mc);
                if (ci.lower > true_prev) {
                    cell.outcome = detail::Outcome::lower_error;
                } else if (ci.upper < true_prev) {
                    cell.outcome = detail::Outcome::upper_error;
                } else {
                    cell.outcome = detail::Outcome::covered;
                }
                cell.width = ci.upper - ci.lower;
            } catch (const std::exception& e) {
                cell.outcome = detail::Outcome::failed;
                if (first_errors[mi].empty()) first_errors[mi] = e.what();
            }
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    auto n_threads = plan.threads > 0 ? static_cast<unsigned>(plan.threads) : hw;
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(n_reps));
    if (n_threads <= 1) {
        for (std::size_t r = 0; r < n_reps; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t r = t; r < n_reps; r += n_threads) run_one(r);
            });
        }
        for (auto& th : pool) th.join();
    }

    SimResult result;
    result.true_prevalence = true_prev;
    result.seed = plan.seed;
    result.replicates = plan.replicates;
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        MethodMetrics mm;
        std::int64_t covered = 0, lower = 0, upper = 0;
        double width_sum = 0.0;
        for (std::size_t r = 0; r < n_reps; ++r) {
            const auto& cell = cells[r * n_methods + mi];
            switch (cell.outcome) {
                case detail::Outcome::covered: ++covered; break;
                case detail::Outcome::lower_error: ++lower; break;
                case detail::Outcome::upper_error: ++upper; break;
                case detail::Outcome::failed: ++mm.failures; continue;
            }
            width_sum += cell.width;
        }
        const auto classified = covered + lower + upper;
        if (classified > 0) {
            const double denom = static_cast<double>(classified);
            mm.coverage = static_cast<double>(covered) / denom;
            mm.lower_error = static_cast<double>(lower) / denom;
            mm.upper_error = static_cast<double>(upper) / denom;
            mm.mean_width = width_sum / denom;
            mm.mc_se = std::sqrt(mm.coverage * (1.0 - mm.coverage) / denom);
        }
        if (mm.failures > 0) {
            result.warnings.push_back(std::string(method_tag(methods[mi])) + " failed in " +
                                      std::to_string(mm.failures) + " replicates: " +
                                      first_errors[mi]);
        }
        result.per_method.emplace_back(methods[mi], mm);
    }
    return result;
}

inline void validate_scenario(const ScenarioSpec& spec) {
    if (!(spec.prevalence >= 0.0 && spec.prevalence <= 1.0)) {
        throw std::domain_error("scenario: prevalence must be in [0, 1]");
    }
    if (spec.n_strata < 1) throw std::domain_error("scenario: n_strata must be >= 1");
    if (spec.stratum_size < 1) throw std::domain_error("scenario: stratum_size must be >= 1");
    if (!(spec.cv_target >= 0.0)) throw std::domain_error("scenario: cv_target must be >= 0");
    if (!(spec.nonzero_fraction > 0.0 && spec.nonzero_fraction <= 1.0)) {
        throw std::domain_error("scenario: nonzero_fraction must be in (0, 1]");
    }
    if (!(spec.sensitivity >= 0.0 && spec.sensitivity <= 1.0) ||
        !(spec.specificity >= 0.0 && spec.specificity <= 1.0)) {
        throw std::domain_error("scenario: sensitivity/specificity must be in [0, 1]");
    }
    if (spec.m_p < 1 || spec.m_n < 1) throw std::domain_error("scenario: m_p and m_n must be >= 1");
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw std::domain_error("scenario: alpha in (0, 1)");
    if (spec.replicates < 1) throw std::domain_error("scenario: replicates must be >= 1");
    if (spec.weight_sets < 1) throw std::domain_error("scenario: weight_sets must be >= 1");
}

inline double sample_cv(const std::vector<double>& w) {
    if (w.size() < 2) return 0.0;
    bool all_equal = true;
    for (double x : w) all_equal = all_equal && x == w[0];
    if (all_equal) return 0.0;
    const double n = static_cast<double>(w.size());
    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : w) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (n - 1.0)) / mean;
}

// One weight set: generates weights at the target cv, places the prevalence
// and runs the replicate loop for the requested methods. Deterministic given
// (spec, seed) for any thread count.
inline SimResult run_scenario(const ScenarioSpec& spec, const std::vector<Method>& methods,
                              int threads = 0) {
    validate_scenario(spec);
    std::vector<double> weights;
    if (spec.n_strata == 1) {
        if (spec.cv_target != 0.0) {
            throw InfeasibleError("scenario: cv_target must be 0 with a single stratum");
        }
        weights = {1.0};
    } else {
        weights = gen_weights(spec.n_strata, spec.cv_target,
                              RngStream{spec.seed, derive_stream(detail::kWeightLabel, 0)});
    }
    const auto theta = assign_prevalence(weights, spec.prevalence, spec.nonzero_fraction,
                                         spec.placement, spec.placement_random,
                                         RngStream{spec.seed, derive_stream(detail::kPlacementLabel, 0)});
    std::vector<StratumConfig> strata(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        strata[i] = StratumConfig{weights[i], spec.stratum_size, theta[i]};
    }
    ReplicatePlan plan;
    plan.sensitivity = spec.sensitivity;
    plan.specificity = spec.specificity;
    plan.m_p = spec.m_p;
    plan.m_n = spec.m_n;
    plan.alpha = spec.alpha;
    plan.replicates = spec.replicates;
    plan.seed = spec.seed;
    plan.mc_samples = spec.mc_samples;
    plan.threads = threads;
    SimResult result = run_replicates(std::move(strata), plan, methods);
    result.cv_actual = sample_cv(weights);
    return result;
}

// Weight-set sweep: weight_sets scenarios whose cv targets form a uniform
// grid over [0, cv_target], each with its own derived seed.
inline std::vector<SimResult> run_sweep(const ScenarioSpec& spec, const std::vector<Method>& methods,
                                        int threads = 0) {
    validate_scenario(spec);
    std::vector<SimResult> out;
    out.reserve(static_cast<std::size_t>(spec.weight_sets));
    for (int w = 0; w < spec.weight_sets; ++w) {
        ScenarioSpec sub = spec;
        sub.weight_sets = 1;
        sub.seed = spec.weight_sets == 1 ? spec.seed : derive_stream(spec.seed, detail::kSweepLabel, static_cast<std::uint64_t>(w));
        sub.cv_target = spec.weight_sets == 1
                            ? spec.cv_target
                            : spec.cv_target * static_cast<double>(w) /
                                  static_cast<double>(spec.weight_sets - 1);
        out.push_back(run_scenario(sub, methods, threads));
    }
    return out;
}

}  // namespace prevci

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "prevci/intervals.hpp"
#include "prevci/simulation.hpp"
#include "support/oracles.hpp"

using namespace prevci;

namespace {

StratifiedSample small_weighted_sample() {
    return StratifiedSample{{{0.35, 120, 4}, {0.25, 80, 1}, {0.25, 150, 0}, {0.15, 60, 2}}};
}

}  // namespace

TEST_CASE("method tags round trip") {
    for (Method m : kAllMethods) {
        auto parsed = parse_method(method_tag(m));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == m);
    }
    CHECK_FALSE(parse_method("wald").has_value());
}

TEST_CASE("clopper-pearson closed forms") {
    const auto zero = clopper_pearson({0, 10}, 0.05);
    CHECK(zero.lower == 0.0);
    CHECK(zero.upper == doctest::Approx(1 - std::pow(0.025, 0.1)).epsilon(1e-9));
    const auto full = clopper_pearson({10, 10}, 0.05);
    CHECK(full.upper == 1.0);
    CHECK(full.lower == doctest::Approx(std::pow(0.025, 0.1)).epsilon(1e-9));
}

TEST_CASE("clopper-pearson matches the binomial test inversion") {
    for (std::int64_t x : {1, 3, 5, 9}) {
        const auto ci = clopper_pearson({x, 10}, 0.05);
        const auto [lo, hi] = oracles::clopper_pearson_by_inversion(x, 10, 0.05);
        CHECK(ci.lower == doctest::Approx(lo).epsilon(1e-9));
        CHECK(ci.upper == doctest::Approx(hi).epsilon(1e-9));
    }
}

TEST_CASE("melded interval: zero counts give an exactly zero lower bound") {
    const auto ci = meld_srs_sesp({0, 100}, {0, 300, 57, 60}, 0.05, {10000, 42});
    CHECK(ci.lower == 0.0);
    CHECK(ci.upper > 0.0);
}

TEST_CASE("melded interval collapses to clopper-pearson under a perfect huge calibration") {
    const AssayCalibration perfect{0, 1000000, 1000000, 1000000};
    const auto meld = meld_srs_sesp({5, 100}, perfect, 0.05, {100000, 7});
    const auto cp = clopper_pearson({5, 100}, 0.05);
    CHECK(std::fabs(meld.lower - cp.lower) < 1e-3);
    CHECK(std::fabs(meld.upper - cp.upper) < 1e-3);
}

TEST_CASE("melded interval agrees with an independent melding implementation") {
    // library at 1e6 samples vs a separate std::mt19937_64 implementation at
    // 2e6 samples
    const BinomialCount c{5, 100};
    const AssayCalibration a{3, 300, 57, 60};
    const auto ci = meld_srs_sesp(c, a, 0.05, {1000000, 20240101});
    const double lo_oracle = oracles::meld_bound_oracle({5, 96}, {4, 297}, {58, 3}, 0.025,
                                                        2000000, 555001);
    const double hi_oracle = oracles::meld_bound_oracle({6, 95}, {3, 298}, {57, 4}, 0.975,
                                                        2000000, 555002);
    CHECK(std::fabs(ci.lower - lo_oracle) < 0.003);
    CHECK(std::fabs(ci.upper - hi_oracle) < 0.003);
}

TEST_CASE("lang-reiczigel is symmetric with a perfect huge calibration") {
    const AssayCalibration perfect{0, 100000000, 100000000, 100000000};
    const auto ci = lang_reiczigel({50, 100}, perfect, 0.05);
    CHECK(std::fabs((0.5 - ci.lower) - (ci.upper - 0.5)) < 1e-6);
}

TEST_CASE("lang-reiczigel matches a long-double transcription") {
    const double q = inv_normal_cdf(0.975);
    const auto ci = lang_reiczigel({2, 100}, {3, 300, 57, 60}, 0.05);
    const auto [lo, hi] = oracles::lang_reiczigel_transcription(2, 100, 3, 300, 57, 60, 0.05, q);
    CHECK(ci.lower == doctest::Approx(lo).epsilon(1e-10));
    CHECK(ci.upper == doctest::Approx(hi).epsilon(1e-10));

    const auto literal = lang_reiczigel({2, 100}, {3, 300, 57, 60}, 0.05, {true});
    const auto [llo, lhi] =
        oracles::lang_reiczigel_transcription(2, 100, 3, 300, 57, 60, 0.05, q, false);
    CHECK(literal.lower == doctest::Approx(llo).epsilon(1e-10));
    CHECK(literal.upper == doctest::Approx(lhi).epsilon(1e-10));
}

TEST_CASE("lang-reiczigel bounds stay in [0, 1]") {
    CounterRng r(RngStream{31, 0});
    for (int trial = 0; trial < 300; ++trial) {
        const std::int64_t n = 20 + static_cast<std::int64_t>(r.next_u64() % 480);
        const std::int64_t x = static_cast<std::int64_t>(r.next_u64() % (n + 1));
        const std::int64_t m_p = 20 + static_cast<std::int64_t>(r.next_u64() % 200);
        const std::int64_t m_n = 20 + static_cast<std::int64_t>(r.next_u64() % 400);
        const auto c_p = static_cast<std::int64_t>(0.6 * m_p + r.next_u64() % (m_p - (std::int64_t)(0.6 * m_p) + 1));
        const auto c_n = static_cast<std::int64_t>(r.next_u64() % (m_n / 4 + 1));
        const auto ci = lang_reiczigel({x, n}, {c_n, m_n, c_p, m_p}, 0.05);
        CHECK(ci.lower >= 0.0);
        CHECK(ci.upper <= 1.0);
        CHECK(ci.lower <= ci.upper);
    }
}

TEST_CASE("lang-reiczigel rejects a degenerate assay") {
    CHECK_THROWS_AS(lang_reiczigel({5, 100}, {9, 10, 0, 10}, 0.05), InfeasibleError);
}

TEST_CASE("gamma interval closed form at zero counts") {
    const StratifiedSample s{{{1.0, 100, 0}}};
    const auto ci = ws_poisson_interval(s, 0.05);
    CHECK(ci.lower == 0.0);
    CHECK(ci.upper == doctest::Approx(-0.01 * std::log(0.025)).epsilon(1e-9));
}

TEST_CASE("gamma interval is invariant under pooling equal strata") {
    const StratifiedSample split{{{0.25, 50, 2}, {0.25, 50, 0}, {0.25, 50, 5}, {0.25, 50, 1}}};
    const StratifiedSample pooled{{{1.0, 200, 8}}};
    const auto a = ws_poisson_interval(split, 0.05);
    const auto b = ws_poisson_interval(pooled, 0.05);
    CHECK(a.lower == doctest::Approx(b.lower).epsilon(1e-12));
    CHECK(a.upper == doctest::Approx(b.upper).epsilon(1e-12));
}

TEST_CASE("gamma interval brackets the point estimate") {
    CounterRng r(RngStream{32, 0});
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + static_cast<int>(r.next_u64() % 10);
        std::vector<Stratum> strata(k);
        double wsum = 0.0;
        std::int64_t total = 0;
        for (auto& st : strata) {
            st.weight = 0.2 + r.next_unit();
            wsum += st.weight;
            st.n = 20 + static_cast<std::int64_t>(r.next_u64() % 200);
            st.x = static_cast<std::int64_t>(r.next_u64() % (st.n / 5 + 1));
            total += st.x;
        }
        if (total == 0) continue;
        for (auto& st : strata) st.weight /= wsum;
        const StratifiedSample s{strata};
        const double y = ws_moments(s).y;
        const auto ci = ws_poisson_interval(s, 0.05);
        CHECK(ci.lower <= y);
        CHECK(ci.upper >= y);
    }
}

TEST_CASE("survey agresti-coull adaptation") {
    // all zero counts: center at c / n_tilde with the fallback effective size
    const StratifiedSample zeros{{{0.5, 50, 0}, {0.5, 50, 0}}};
    const double q = inv_normal_cdf(0.975);
    const double c = q * q / 2;
    const auto ci = dpac_interval(zeros, 0.05);
    const double p_tilde = c / (100 + 2 * c);
    CHECK(ci.upper == doctest::Approx(p_tilde + q * std::sqrt(p_tilde * (1 - p_tilde) / (100 + 2 * c)))
                          .epsilon(1e-12));

    const StratifiedSample two{{{0.5, 100, 10}, {0.5, 100, 10}}};
    const auto ci2 = dpac_interval(two, 0.05);
    const auto [lo, hi] = oracles::dpac_transcription({0.5, 0.5}, {100, 100}, {10, 10}, 0.05, q);
    CHECK(ci2.lower == doctest::Approx(lo).epsilon(1e-10));
    CHECK(ci2.upper == doctest::Approx(hi).epsilon(1e-10));
}

TEST_CASE("single-stratum agresti-coull adaptation uses the reduced effective size") {
    const double q = inv_normal_cdf(0.975);
    const StratifiedSample s{{{1.0, 100, 20}}};
    const auto ci = dpac_interval(s, 0.05);
    // n_eff = (1 - 0.2) * 100
    const double n_eff = 80.0;
    const double c = q * q / 2;
    const double x_tilde = 0.2 * n_eff + c;
    const double n_tilde = n_eff + 2 * c;
    const double p_tilde = x_tilde / n_tilde;
    const double half = q * std::sqrt(p_tilde * (1 - p_tilde) / n_tilde);
    CHECK(ci.lower == doctest::Approx(p_tilde - half).epsilon(1e-12));
    CHECK(ci.upper == doctest::Approx(p_tilde + half).epsilon(1e-12));
}

TEST_CASE("effective-count interval") {
    const StratifiedSample zeros{{{0.5, 50, 0}, {0.5, 50, 0}}};
    const auto ci = kg_interval(zeros, 0.05);
    CHECK(ci.lower == 0.0);
    // with all counts zero the effective size is the total sample size, so
    // this coincides with the exact binomial interval
    const auto cp = clopper_pearson({0, 100}, 0.05);
    CHECK(ci.upper == doctest::Approx(cp.upper).epsilon(1e-12));

    const StratifiedSample two{{{0.5, 100, 10}, {0.5, 100, 10}}};
    const auto ci2 = kg_interval(two, 0.05);
    CHECK(ci2.lower == doctest::Approx(quantile(ConfDist::beta_dist(18, 163), 0.025)).epsilon(1e-9));
    CHECK(ci2.upper == doctest::Approx(quantile(ConfDist::beta_dist(19, 162), 0.975)).epsilon(1e-9));
}

TEST_CASE("weighted melded intervals: zero counts give an exactly zero lower bound") {
    const StratifiedSample zeros{{{0.5, 50, 0}, {0.5, 50, 0}}};
    const AssayCalibration a{0, 300, 57, 60};
    CHECK(wprev_sesp_poisson(zeros, a, 0.05, {10000, 3}).lower == 0.0);
    CHECK(wprev_sesp_binomial(zeros, a, 0.05, {10000, 3}).lower == 0.0);
}

TEST_CASE("weighted melded intervals collapse to their unadjusted counterparts") {
    const AssayCalibration perfect{0, 1000000, 1000000, 1000000};
    const auto s = small_weighted_sample();
    const auto wp = wprev_sesp_poisson(s, perfect, 0.05, {200000, 17});
    const auto ws = ws_poisson_interval(s, 0.05);
    CHECK(std::fabs(wp.lower - ws.lower) < 1e-3);
    CHECK(std::fabs(wp.upper - ws.upper) < 1e-3);

    const auto wb = wprev_sesp_binomial(s, perfect, 0.05, {200000, 18});
    const auto kg = kg_interval(s, 0.05);
    CHECK(std::fabs(wb.lower - kg.lower) < 1e-3);
    CHECK(std::fabs(wb.upper - kg.upper) < 1e-3);
}

TEST_CASE("weighted poisson melding agrees with an independent implementation") {
    const auto s = small_weighted_sample();
    const AssayCalibration a{3, 300, 57, 60};
    const auto ci = wprev_sesp_poisson(s, a, 0.05, {1000000, 91});
    const auto m = ws_moments(s);
    const double lo_oracle = oracles::meld_bound_oracle_gamma(
        m.y * m.y / m.v, m.v / m.y, {4, 297}, {58, 3}, 0.025, 2000000, 777001);
    const double hi_oracle = oracles::meld_bound_oracle_gamma(
        m.y_star * m.y_star / m.v_star, m.v_star / m.y_star, {3, 298}, {57, 4}, 0.975, 2000000,
        777002);
    CHECK(std::fabs(ci.lower - lo_oracle) < 0.003);
    CHECK(std::fabs(ci.upper - hi_oracle) < 0.003);
}

TEST_CASE("interval nesting across confidence levels") {
    const auto s = small_weighted_sample();
    const BinomialCount c{5, 100};
    const AssayCalibration a{3, 300, 57, 60};
    const MCConfig mc{20000, 5150};

    auto nested = [](const Interval& wide, const Interval& narrow) {
        CHECK(wide.lower <= narrow.lower + 1e-12);
        CHECK(wide.upper >= narrow.upper - 1e-12);
    };
    nested(clopper_pearson(c, 0.01), clopper_pearson(c, 0.05));
    nested(meld_srs_sesp(c, a, 0.01, mc), meld_srs_sesp(c, a, 0.05, mc));
    nested(lang_reiczigel(c, a, 0.01), lang_reiczigel(c, a, 0.05));
    nested(ws_poisson_interval(s, 0.01), ws_poisson_interval(s, 0.05));
    nested(dpac_interval(s, 0.01), dpac_interval(s, 0.05));
    nested(kg_interval(s, 0.01), kg_interval(s, 0.05));
    nested(wprev_sesp_poisson(s, a, 0.01, mc), wprev_sesp_poisson(s, a, 0.05, mc));
    nested(wprev_sesp_binomial(s, a, 0.01, mc), wprev_sesp_binomial(s, a, 0.05, mc));
}

TEST_CASE("melded upper bound never decreases as the count grows (shared seed)") {
    const AssayCalibration a{3, 300, 57, 60};
    const MCConfig mc{20000, 8080};
    double prev = -1.0;
    for (std::int64_t x = 0; x <= 15; ++x) {
        const auto ci = meld_srs_sesp({x, 30}, a, 0.05, mc);
        CHECK(ci.upper >= prev - 1e-12);
        prev = ci.upper;
    }
}

TEST_CASE("all bounds stay in [0, 1] on adversarial inputs") {
    const StratifiedSample tiny{{{1.0, 1, 1}}};  // y* = 2, upper gamma quantile beyond 1
    const auto ws = ws_poisson_interval(tiny, 0.05);
    CHECK(ws.upper == 1.0);
    const auto dp = dpac_interval(tiny, 0.05);
    CHECK(dp.upper <= 1.0);
    CHECK(dp.lower >= 0.0);
    const auto kg = kg_interval(tiny, 0.05);  // degenerate effective size
    CHECK(kg.lower == 0.0);
    CHECK(kg.upper == 1.0);
    CHECK(!kg.warnings.empty());
}

TEST_CASE("application-shaped data: the poisson melding is at least as wide") {
    // 8058 individually weighted records with weight cv near 250% and a
    // perfect small calibration
    const auto weights = gen_weights(8058, 2.5, RngStream{4242, 0});
    std::vector<Stratum> strata(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto y = binom_draw(1, 0.046, RngStream{4242, derive_stream(1, 0, i)});
        strata[i] = Stratum{weights[i], 1, y};
    }
    const StratifiedSample s{strata};
    const AssayCalibration cal{0, 300, 56, 56};
    const auto p = wprev_sesp_poisson(s, cal, 0.05, {20000, 11});
    const auto b = wprev_sesp_binomial(s, cal, 0.05, {20000, 12});
    CHECK(p.lower < p.upper);
    CHECK(b.lower < b.upper);
    CHECK(p.upper >= b.upper - 1e-9);
    CHECK(p.upper - p.lower >= b.upper - b.lower - 1e-9);
}

TEST_CASE("configuration validation") {
    CHECK_THROWS_AS(clopper_pearson({5, 10}, 0.0), std::domain_error);
    CHECK_THROWS_AS(clopper_pearson({5, 10}, 1.0), std::domain_error);
    CHECK_THROWS_AS(meld_srs_sesp({5, 10}, {3, 300, 57, 60}, 0.05, {999, 1}), std::domain_error);
}

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prevci/prevci.hpp"

namespace {

struct CiOptions {
    std::vector<std::string> methods;
    std::int64_t x = -1;
    std::int64_t n = -1;
    std::string stratum_file;
    std::string individual_file;
    double alpha = 0.05;
    std::uint64_t mc = 100000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::int64_t spec_x = -1, spec_n = -1, sens_x = -1, sens_n = -1;
    bool lr_literal_variance = false;
    bool human = false;
};

struct CiInput {
    prevci::StratifiedSample sample;
    std::optional<prevci::BinomialCount> srs;  // set when the sample is one stratum
    std::string digest;
    std::vector<std::string> warnings;
};

std::string canonical_digest(const prevci::StratifiedSample& s) {
    std::ostringstream os;
    os << "strata:" << s.strata.size() << ';';
    for (const auto& st : s.strata) {
        os << prevci::format_full(st.weight) << ',' << st.n << ',' << st.x << ';';
    }
    return prevci::fnv1a_digest(os.str());
}

CiInput load_ci_input(const CiOptions& opt) {
    const int modes = (opt.x >= 0 || opt.n >= 0 ? 1 : 0) + (opt.stratum_file.empty() ? 0 : 1) +
                      (opt.individual_file.empty() ? 0 : 1);
    if (modes != 1) {
        throw prevci::ParseError(
            "exactly one input mode required: --x/--n, --stratum-file or --individual-file");
    }
    CiInput input;
    if (!opt.stratum_file.empty()) {
        std::ifstream in(opt.stratum_file);
        if (!in) throw prevci::IoError("cannot open " + opt.stratum_file);
        bool renormalized = false;
        input.sample = prevci::make_stratified_sample(prevci::parse_stratum_csv(in), &renormalized);
        if (renormalized) {
            input.warnings.emplace_back("stratum weights renormalized to sum 1");
        }
    } else if (!opt.individual_file.empty()) {
        std::ifstream in(opt.individual_file);
        if (!in) throw prevci::IoError("cannot open " + opt.individual_file);
        input.sample = prevci::normalized_weights(prevci::parse_individual_csv(in));
    } else {
        if (opt.x < 0 || opt.n < 1) {
            throw prevci::ParseError("scalar mode requires --x >= 0 and --n >= 1");
        }
        input.sample = prevci::StratifiedSample{{prevci::Stratum{1.0, opt.n, opt.x}}};
        if (opt.x > opt.n) throw prevci::ParseError("scalar mode requires x <= n");
    }
    if (input.sample.strata.size() == 1) {
        input.srs = prevci::BinomialCount{input.sample.strata[0].x, input.sample.strata[0].n};
    }
    input.digest = canonical_digest(input.sample);
    return input;
}

int run_ci(const CiOptions& opt) {
    using namespace prevci;
    if (opt.methods.empty()) throw ParseError("at least one --method is required");
    std::vector<Method> methods;
    for (const auto& tag : opt.methods) {
        const auto m = parse_method(tag);
        if (!m) throw ParseError("unknown method '" + tag + "'");
        methods.push_back(*m);
    }
    const CiInput input = load_ci_input(opt);

    const bool has_calibration = opt.spec_x >= 0 || opt.spec_n >= 0 || opt.sens_x >= 0 ||
                                 opt.sens_n >= 0;
    std::optional<AssayCalibration> cal;
    if (has_calibration) {
        if (opt.spec_x < 0 || opt.spec_n < 1 || opt.sens_x < 0 || opt.sens_n < 1) {
            throw ParseError("calibration requires all of --spec-x --spec-n --sens-x --sens-n");
        }
        cal = AssayCalibration{opt.spec_x, opt.spec_n, opt.sens_x, opt.sens_n};
        validate(*cal);
    }

    for (Method m : methods) {
        if (method_uses_calibration(m) && !cal) {
            throw ParseError(std::string(method_tag(m)) +
                             " requires calibration counts (--spec-x --spec-n --sens-x --sens-n)");
        }
        if (method_uses_mc(m) && !opt.seed_given) {
            throw ParseError(std::string(method_tag(m)) + " requires --seed");
        }
        if (method_requires_srs(m) && !input.srs) {
            if (m == Method::lang_reiczigel) {
                throw ParseError("Lang-Reiczigel requires a simple random sample");
            }
            throw ParseError(std::string(method_tag(m)) + " requires a simple random sample");
        }
    }

    const double apparent = apparent_prevalence(input.sample);
    const double corrected =
        cal ? rogan_gladen(apparent, cal->phi_n_hat(), cal->phi_p_hat()) : apparent;

    for (Method m : methods) {
        const MCConfig mc{opt.mc, opt.seed};
        Interval ci;
        switch (m) {
            case Method::clopper_pearson: ci = clopper_pearson(*input.srs, opt.alpha); break;
            case Method::meld_srs: ci = meld_srs_sesp(*input.srs, *cal, opt.alpha, mc); break;
            case Method::lang_reiczigel:
                ci = lang_reiczigel(*input.srs, *cal, opt.alpha,
                                    LangReiczigelOptions{opt.lr_literal_variance});
                break;
            case Method::ws_poisson: ci = ws_poisson_interval(input.sample, opt.alpha); break;
            case Method::dpac: ci = dpac_interval(input.sample, opt.alpha); break;
            case Method::korn_graubard: ci = kg_interval(input.sample, opt.alpha); break;
            case Method::wprev_poisson:
                ci = wprev_sesp_poisson(input.sample, *cal, opt.alpha, mc);
                break;
            case Method::wprev_binomial:
                ci = wprev_sesp_binomial(input.sample, *cal, opt.alpha, mc);
                break;
        }
        RunReport report;
        report.method = std::string(method_tag(m));
        report.alpha = opt.alpha;
        report.apparent = apparent;
        report.corrected = corrected;
        report.lower = ci.lower;
        report.upper = ci.upper;
        report.mc_samples = ci.mc_samples;
        report.seed = ci.seed;
        report.input_digest = input.digest;
        report.warnings = input.warnings;
        report.warnings.insert(report.warnings.end(), ci.warnings.begin(), ci.warnings.end());
        std::cout << report_to_json(report).dump() << "\n";
        if (opt.human) {
            char line[160];
            std::snprintf(line, sizeof(line), "%s: estimate %.2f%%, %.0f%% CI (%.2f%%, %.2f%%)",
                          std::string(method_tag(m)).c_str(), 100.0 * corrected,
                          100.0 * (1.0 - opt.alpha), 100.0 * ci.lower, 100.0 * ci.upper);
            std::cerr << line << "\n";
        }
    }
    return 0;
}

int run_simulate(const std::string& scenario_path, const std::string& out_path, int threads) {
    using namespace prevci;
    std::ifstream in(scenario_path);
    if (!in) throw IoError("cannot open " + scenario_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
    }
    const auto [spec, methods] = scenario_from_json(j);
    const auto results = run_sweep(spec, methods, threads);
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open " + out_path + " for writing");
    write_sim_csv(out, results);
    out.flush();
    if (!out) throw IoError("failed writing " + out_path);
    std::size_t rows = 0;
    for (const auto& r : results) {
        rows += r.per_method.size();
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    }
    std::cout << "wrote " << rows << " rows to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"confidence intervals for prevalence estimates from surveys"};
    app.require_subcommand(1);

    CiOptions ci_opt;
    auto* ci = app.add_subcommand("ci", "compute confidence intervals for one data set");
    ci->add_option("--method", ci_opt.methods,
                   "method tag: cp, meld-srs, lr, wspoisson, dpac, kg, wprev-poisson, "
                   "wprev-binomial (repeatable)");
    ci->add_option("--x", ci_opt.x, "positive count (scalar mode)");
    ci->add_option("--n", ci_opt.n, "sample size (scalar mode)");
    ci->add_option("--stratum-file", ci_opt.stratum_file, "CSV with header stratum,weight,n,x");
    ci->add_option("--individual-file", ci_opt.individual_file, "CSV with header weight,positive");
    ci->add_option("--alpha", ci_opt.alpha, "two-sided error level (default 0.05)");
    ci->add_option("--mc", ci_opt.mc, "Monte Carlo samples per bound (default 100000)");
    auto* seed_opt = ci->add_option("--seed", ci_opt.seed, "seed (required for Monte Carlo methods)");
    ci->add_option("--spec-x", ci_opt.spec_x, "positives among negative controls");
    ci->add_option("--spec-n", ci_opt.spec_n, "number of negative controls");
    ci->add_option("--sens-x", ci_opt.sens_x, "positives among positive controls");
    ci->add_option("--sens-n", ci_opt.sens_n, "number of positive controls");
    ci->add_flag("--lr-literal-variance", ci_opt.lr_literal_variance,
                 "use the literal (1+prev)^2 variance coefficient in lr");
    ci->add_flag("--human", ci_opt.human, "also print a 2-decimal percent summary to stderr");

    std::string scenario_path, out_path;
    int threads = 0;
    auto* sim = app.add_subcommand("simulate", "run a coverage study from a scenario file");
    sim->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sim->add_option("output", out_path, "output CSV path")->required();
    sim->add_option("--threads", threads, "worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
        ci_opt.seed_given = seed_opt->count() > 0;
        if (ci->parsed()) return run_ci(ci_opt);
        if (sim->parsed()) return run_simulate(scenario_path, out_path, threads);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const prevci::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const prevci::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const prevci::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

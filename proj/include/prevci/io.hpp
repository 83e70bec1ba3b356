#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prevci/errors.hpp"
#include "prevci/simulation.hpp"
#include "prevci/survey.hpp"

namespace prevci {

namespace detail {

inline std::string strip_cr(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    return line;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

inline double parse_double_field(const std::string& field, const std::string& context) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        throw ParseError(context + ": expected a number, got '" + field + "'");
    }
    if (pos != field.size()) throw ParseError(context + ": trailing characters in '" + field + "'");
    return v;
}

inline std::int64_t parse_count_field(const std::string& field, const std::string& context) {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(field, &pos);
    } catch (const std::exception&) {
        throw ParseError(context + ": expected an integer, got '" + field + "'");
    }
    if (pos != field.size()) throw ParseError(context + ": trailing characters in '" + field + "'");
    return v;
}

inline std::uint64_t parse_u64_field(const std::string& field, const std::string& context) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(field, &pos);
    } catch (const std::exception&) {
        throw ParseError(context + ": expected an unsigned integer, got '" + field + "'");
    }
    if (pos != field.size()) throw ParseError(context + ": trailing characters in '" + field + "'");
    return v;
}

}  // namespace detail

// Stratum file: header `stratum,weight,n,x`, one row per stratum. Returns
// raw strata; weight normalization rules are applied by
// make_stratified_sample.
inline std::vector<Stratum> parse_stratum_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != "stratum,weight,n,x") {
        throw ParseError("stratum file line 1: expected header 'stratum,weight,n,x'");
    }
    std::vector<Stratum> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        const std::string context = "stratum file line " + std::to_string(line_no);
        if (fields.size() != 4) throw ParseError(context + ": expected 4 fields");
        Stratum s;
        s.weight = detail::parse_double_field(fields[1], context);
        s.n = detail::parse_count_field(fields[2], context);
        s.x = detail::parse_count_field(fields[3], context);
        if (!(s.weight > 0.0)) throw ParseError(context + ": weight must be positive");
        if (s.n < 1 || s.x < 0 || s.x > s.n) throw ParseError(context + ": needs 0 <= x <= n, n >= 1");
        out.push_back(s);
    }
    if (out.empty()) throw ParseError("stratum file: no data rows");
    return out;
}

// Individual file: header `weight,positive`, positive in {0, 1}. Weights are
// raw and always rescaled downstream.
inline SurveyFrame parse_individual_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != "weight,positive") {
        throw ParseError("individual file line 1: expected header 'weight,positive'");
    }
    SurveyFrame f;
    f.mode = SurveyFrame::WeightMode::raw;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        const std::string context = "individual file line " + std::to_string(line_no);
        if (fields.size() != 2) throw ParseError(context + ": expected 2 fields");
        const double w = detail::parse_double_field(fields[0], context);
        const auto y = detail::parse_count_field(fields[1], context);
        if (!(w > 0.0)) throw ParseError(context + ": weight must be positive");
        if (y != 0 && y != 1) throw ParseError(context + ": positive must be 0 or 1");
        f.weights.push_back(w);
        f.outcomes.push_back(static_cast<int>(y));
    }
    if (f.outcomes.empty()) throw ParseError("individual file: no data rows");
    return f;
}

// Scenario JSON with snake_case keys; unknown keys are rejected.
inline std::pair<ScenarioSpec, std::vector<Method>> scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("scenario: expected a JSON object");
    static const std::vector<std::string> known = {
        "prevalence",  "n_strata",    "stratum_size", "cv_target", "nonzero_fraction",
        "placement",   "sensitivity", "specificity",  "m_p",       "m_n",
        "alpha",       "replicates",  "seed",         "methods",   "mc_samples",
        "weight_sets", "placement_random"};
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const auto& k : known) ok = ok || k == key;
        if (!ok) throw ParseError("scenario: unknown key '" + key + "'");
    }
    auto require = [&j](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw ParseError(std::string("scenario: missing key '") + key + "'");
        return j.at(key);
    };
    ScenarioSpec spec;
    try {
        spec.prevalence = require("prevalence").get<double>();
        spec.n_strata = require("n_strata").get<int>();
        spec.stratum_size = require("stratum_size").get<std::int64_t>();
        spec.cv_target = require("cv_target").get<double>();
        spec.nonzero_fraction = require("nonzero_fraction").get<double>();
        const auto placement = parse_placement(require("placement").get<std::string>());
        if (!placement) throw ParseError("scenario: placement must be highest/lowest/uniform");
        spec.placement = *placement;
        spec.sensitivity = require("sensitivity").get<double>();
        spec.specificity = require("specificity").get<double>();
        spec.m_p = require("m_p").get<std::int64_t>();
        spec.m_n = require("m_n").get<std::int64_t>();
        spec.replicates = require("replicates").get<std::int64_t>();
        spec.seed = require("seed").get<std::uint64_t>();
        if (j.contains("alpha")) spec.alpha = j.at("alpha").get<double>();
        if (j.contains("mc_samples")) spec.mc_samples = j.at("mc_samples").get<std::uint64_t>();
        if (j.contains("weight_sets")) spec.weight_sets = j.at("weight_sets").get<int>();
        if (j.contains("placement_random")) {
            spec.placement_random = j.at("placement_random").get<bool>();
        }
        std::vector<Method> methods;
        for (const auto& tag : require("methods")) {
            const auto m = parse_method(tag.get<std::string>());
            if (!m) throw ParseError("scenario: unknown method '" + tag.get<std::string>() + "'");
            methods.push_back(*m);
        }
        if (methods.empty()) throw ParseError("scenario: methods must be nonempty");
        return {spec, methods};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
}

// One `ci` invocation result. Round-trips losslessly through its JSON form.
struct RunReport {
    int schema_version = 1;
    std::string method;
    double alpha = 0.05;
    double apparent = 0.0;
    double corrected = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    std::uint64_t mc_samples = 0;
    std::uint64_t seed = 0;
    std::string input_digest;
    std::vector<std::string> warnings;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

inline nlohmann::json report_to_json(const RunReport& r) {
    return nlohmann::json{{"schema_version", r.schema_version},
                          {"method", r.method},
                          {"alpha", r.alpha},
                          {"estimate", {{"apparent", r.apparent}, {"corrected", r.corrected}}},
                          {"lower", r.lower},
                          {"upper", r.upper},
                          {"mc_samples", r.mc_samples},
                          {"seed", r.seed},
                          {"input_digest", r.input_digest},
                          {"warnings", r.warnings}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
    RunReport r;
    try {
        r.schema_version = j.at("schema_version").get<int>();
        r.method = j.at("method").get<std::string>();
        r.alpha = j.at("alpha").get<double>();
        r.apparent = j.at("estimate").at("apparent").get<double>();
        r.corrected = j.at("estimate").at("corrected").get<double>();
        r.lower = j.at("lower").get<double>();
        r.upper = j.at("upper").get<double>();
        r.mc_samples = j.at("mc_samples").get<std::uint64_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.input_digest = j.at("input_digest").get<std::string>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return r;
}

// FNV-1a digest of a canonical input serialization; lets a report identify
// the inputs it was computed from.
inline std::string fnv1a_digest(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline constexpr std::string_view kSimCsvHeader =
    "cv_actual,method,coverage,lower_error,upper_error,mean_width,mc_se,seed";

// One CSV row per (weight set, method).
inline void write_sim_csv(std::ostream& out, const std::vector<SimResult>& results) {
    out << kSimCsvHeader << "\n";
    for (const auto& res : results) {
        for (const auto& [method, mm] : res.per_method) {
            out << format_full(res.cv_actual) << ',' << method_tag(method) << ','
                << format_full(mm.coverage) << ',' << format_full(mm.lower_error) << ','
                << format_full(mm.upper_error) << ',' << format_full(mm.mean_width) << ','
                << format_full(mm.mc_se) << ',' << res.seed << "\n";
        }
    }
}

struct SimCsvRow {
    double cv_actual = 0.0;
    std::string method;
    double coverage = 0.0;
    double lower_error = 0.0;
    double upper_error = 0.0;
    double mean_width = 0.0;
    double mc_se = 0.0;
    std::uint64_t seed = 0;
};

inline std::vector<SimCsvRow> parse_sim_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kSimCsvHeader) {
        throw ParseError("simulation csv line 1: unexpected header");
    }
    std::vector<SimCsvRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        const std::string context = "simulation csv line " + std::to_string(line_no);
        if (f.size() != 8) throw ParseError(context + ": expected 8 fields");
        SimCsvRow row;
        row.cv_actual = detail::parse_double_field(f[0], context);
        row.method = f[1];
        row.coverage = detail::parse_double_field(f[2], context);
        row.lower_error = detail::parse_double_field(f[3], context);
        row.upper_error = detail::parse_double_field(f[4], context);
        row.mean_width = detail::parse_double_field(f[5], context);
        row.mc_se = detail::parse_double_field(f[6], context);
        row.seed = detail::parse_u64_field(f[7], context);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace prevci

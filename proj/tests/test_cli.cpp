// Integration checks for the command-line front end. Takes the binary path
// as argv[1], drives it through std::system and inspects exit codes and
// outputs.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "prevci/io.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("%s %s\n", ok ? "[ok]" : "[FAILED]", what.c_str());
    if (!ok) ++g_failures;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& cli, const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd = cli + " " + args + " >" + out_file.string() + " 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-cli>\n");
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path dir = fs::temp_directory_path() / "prevci_cli_test";
    fs::create_directories(dir);

    // scalar clopper-pearson
    {
        const auto r = run(cli, "ci --method cp --x 0 --n 10 --alpha 0.05", dir);
        check(r.exit_code == 0, "cp scalar run exits 0");
        const auto j = nlohmann::json::parse(r.out);
        check(j.at("method") == "cp", "cp report method tag");
        check(j.at("schema_version") == 1, "cp report schema version");
        check(j.at("lower").get<double>() == 0.0, "cp zero-count lower bound");
        check(std::fabs(j.at("upper").get<double>() - 0.30849710781876) < 1e-9,
              "cp zero-count upper bound");
        check(j.at("estimate").at("apparent").get<double>() == 0.0, "cp apparent estimate");
    }

    // several methods in one invocation: one JSON line each
    {
        const auto r = run(cli,
                           "ci --method cp --method wspoisson --method kg --x 5 --n 100", dir);
        check(r.exit_code == 0, "multi-method run exits 0");
        std::istringstream lines(r.out);
        std::string line;
        int count = 0;
        while (std::getline(lines, line)) {
            if (!line.empty()) {
                const auto j = nlohmann::json::parse(line);
                check(j.at("lower").get<double>() <= j.at("upper").get<double>(),
                      "report bounds ordered");
                ++count;
            }
        }
        check(count == 3, "one report per method");
    }

    // calibration-adjusted methods
    {
        const auto r = run(cli,
                           "ci --method meld-srs --method lr --x 5 --n 100 --spec-x 3 --spec-n 300 "
                           "--sens-x 57 --sens-n 60 --seed 11 --mc 20000 --human",
                           dir);
        check(r.exit_code == 0, "melded srs run exits 0");
        check(r.err.find("%") != std::string::npos, "human summary goes to stderr");
        std::istringstream lines(r.out);
        std::string line;
        std::getline(lines, line);
        const auto j = nlohmann::json::parse(line);
        check(j.at("mc_samples") == 20000, "mc sample count reported");
        check(j.at("seed") == 11, "seed reported");
        const double corrected = j.at("estimate").at("corrected").get<double>();
        check(std::fabs(corrected - 0.04 / 0.94) < 1e-12, "corrected estimate");
    }

    // stratum files
    {
        write_file(dir / "multi.csv", "stratum,weight,n,x\na,0.5,100,3\nb,0.5,50,0\n");
        auto r = run(cli, "ci --method kg --stratum-file " + (dir / "multi.csv").string(), dir);
        check(r.exit_code == 0, "stratum-file kg run exits 0");

        r = run(cli, "ci --method lr --stratum-file " + (dir / "multi.csv").string() +
                         " --spec-x 3 --spec-n 300 --sens-x 57 --sens-n 60",
                dir);
        check(r.exit_code == 2, "lr on a multi-stratum file exits 2");
        check(r.err.find("simple random sample") != std::string::npos,
              "lr mismatch message names the constraint");

        write_file(dir / "badrow.csv", "stratum,weight,n,x\na,0.5,100,3\nb,0.5,oops,0\n");
        r = run(cli, "ci --method kg --stratum-file " + (dir / "badrow.csv").string(), dir);
        check(r.exit_code == 2, "malformed row exits 2");
        check(r.err.find("line 3") != std::string::npos, "malformed row names the line");

        write_file(dir / "badsum.csv", "stratum,weight,n,x\na,0.7,100,3\nb,0.5,50,0\n");
        r = run(cli, "ci --method kg --stratum-file " + (dir / "badsum.csv").string(), dir);
        check(r.exit_code == 2, "far-off weight sum exits 2");
    }

    // individual file with calibration
    {
        std::ostringstream csv;
        csv << "weight,positive\n";
        for (int i = 0; i < 60; ++i) {
            csv << (1.0 + (i % 7) * 0.3) << "," << (i % 9 == 0 ? 1 : 0) << "\n";
        }
        write_file(dir / "people.csv", csv.str());
        const std::string args = "ci --method wprev-binomial --individual-file " +
                                 (dir / "people.csv").string() +
                                 " --sens-x 56 --sens-n 56 --spec-x 0 --spec-n 300 --alpha 0.05 "
                                 "--seed 1 --mc 10000";
        const auto r1 = run(cli, args, dir);
        check(r1.exit_code == 0, "individual-file melded run exits 0");
        const auto j = nlohmann::json::parse(r1.out);
        check(j.at("lower").get<double>() < j.at("upper").get<double>(),
              "individual-file bounds finite and ordered");
        const auto r2 = run(cli, args, dir);
        check(r1.out == r2.out, "identical reruns are byte-identical");
    }

    // error paths
    {
        auto r = run(cli, "ci --method meld-srs --x 5 --n 100 --spec-x 3 --spec-n 300 "
                          "--sens-x 57 --sens-n 60",
                     dir);
        check(r.exit_code == 2, "missing seed for a Monte Carlo method exits 2");

        r = run(cli, "ci --method lr --x 5 --n 100 --spec-x 9 --spec-n 10 --sens-x 0 --sens-n 10",
                dir);
        check(r.exit_code == 3, "degenerate assay exits 3");

        r = run(cli, "ci --method nope --x 5 --n 100", dir);
        check(r.exit_code == 2, "unknown method exits 2");

        r = run(cli, "ci --method cp --x 5 --n 100 --stratum-file " + (dir / "multi.csv").string(),
                dir);
        check(r.exit_code == 2, "two input modes exit 2");

        r = run(cli, "ci --method cp --stratum-file " + (dir / "missing.csv").string(), dir);
        check(r.exit_code == 4, "missing input file exits 4");
    }

    // simulate
    {
        const std::string scenario = R"({
            "prevalence": 0.01, "n_strata": 15, "stratum_size": 40,
            "cv_target": 1.0, "nonzero_fraction": 0.5, "placement": "highest",
            "sensitivity": 0.95, "specificity": 0.98, "m_p": 60, "m_n": 300,
            "replicates": 60, "seed": 99, "mc_samples": 2000, "weight_sets": 2,
            "methods": ["wspoisson", "wprev-poisson"]
        })";
        write_file(dir / "scenario.json", scenario);
        const std::string out1 = (dir / "sim1.csv").string();
        const std::string out2 = (dir / "sim2.csv").string();
        auto r = run(cli, "simulate " + (dir / "scenario.json").string() + " " + out1 +
                         " --threads 1",
                     dir);
        check(r.exit_code == 0, "simulate exits 0");
        r = run(cli, "simulate " + (dir / "scenario.json").string() + " " + out2 + " --threads 2",
                dir);
        check(r.exit_code == 0, "simulate with two workers exits 0");
        check(slurp(out1) == slurp(out2), "simulate output is worker-count invariant");
        std::ifstream in(out1);
        const auto rows = prevci::parse_sim_csv(in);
        check(rows.size() == 4, "one csv row per weight set and method");

        const std::string infeasible = R"({
            "prevalence": 0.01, "n_strata": 2, "stratum_size": 40,
            "cv_target": 3.0, "nonzero_fraction": 0.5, "placement": "highest",
            "sensitivity": 1.0, "specificity": 1.0, "m_p": 60, "m_n": 300,
            "replicates": 10, "seed": 1, "methods": ["wspoisson"]
        })";
        write_file(dir / "infeasible.json", infeasible);
        r = run(cli, "simulate " + (dir / "infeasible.json").string() + " " +
                         (dir / "sim3.csv").string(),
                dir);
        check(r.exit_code == 3, "infeasible cv exits 3");

        const std::string unknown_key = R"({
            "prevalence": 0.01, "n_strata": 5, "stratum_size": 40,
            "cv_target": 1.0, "nonzero_fraction": 0.5, "placement": "highest",
            "sensitivity": 1.0, "specificity": 1.0, "m_p": 60, "m_n": 300,
            "replicates": 10, "seed": 1, "methods": ["wspoisson"], "surprise": true
        })";
        write_file(dir / "unknown.json", unknown_key);
        r = run(cli, "simulate " + (dir / "unknown.json").string() + " " +
                         (dir / "sim4.csv").string(),
                dir);
        check(r.exit_code == 2, "unknown scenario key exits 2");

        r = run(cli, "simulate " + (dir / "scenario.json").string() + " /nonexistent/dir/out.csv",
                dir);
        check(r.exit_code == 4, "unwritable output exits 4");
    }

    std::printf("%s: %d failure(s)\n", g_failures == 0 ? "PASSED" : "FAILED", g_failures);
    return g_failures == 0 ? 0 : 1;
}

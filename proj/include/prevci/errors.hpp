#pragma once

#include <stdexcept>
#include <string>

namespace prevci {

// Model configuration that cannot be satisfied (infeasible coefficient of
// variation, prevalence placement exceeding 1, degenerate assay, ...).
// The CLI maps this to exit code 3.
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file or option set. The CLI maps this to exit code 2.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failure (unreadable input, unwritable output). Exit code 4.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace prevci

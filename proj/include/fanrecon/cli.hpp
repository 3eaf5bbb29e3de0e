#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "fanrecon/workflow.hpp"

namespace fanrecon::cli {

struct CliConfig {
    RunConfig run;
    std::filesystem::path input;  // sinogram (real mode) or phantom (simulation)
    int iterations = 10;
    std::filesystem::path out = ".";
    bool high_priority = false;
};

/// Bad command line; the message names the offending flag or token.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// --help was given; what() holds the help text.
class HelpRequested : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

CliConfig parse_args(int argc, const char* const* argv);

/// Runs the reconstruction and writes report.txt, convergence.csv,
/// reconstruction.txt, reconstruction.pgm (and sinogram.txt when simulating)
/// into config.out. Prints the report on `out`. Throws on failure.
void run_batch(const CliConfig& config, std::ostream& out, std::ostream& err);

/// Exit status: 0 success, 1 usage, 2 data or format problem, 3 runtime failure.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fanrecon::cli

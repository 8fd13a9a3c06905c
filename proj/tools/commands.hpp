#pragma once

#include "run_config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace soliton::cli {

inline constexpr int kExitConfig = 1;
inline constexpr int kExitIntegrity = 2;
inline constexpr int kExitFailure = 3;

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> artifacts;  // file names inside cfg.out
    std::vector<std::string> problems;   // integrity failures, one per line
};

/// Runs cfg.command after check(cfg), writes the artifacts and manifest.txt
/// into cfg.out and a short summary to log. Errors other than integrity
/// failures propagate as exceptions.
RunResult run(const RunConfig& cfg, std::ostream& log);

struct BenchRow {
    int strings = 0;
    double seconds = 0;  // fastest of the repeats
};

struct BenchReport {
    std::vector<BenchRow> rows;
    bool has_exponent = false;
    double exponent = 0;
    bool regression = false;  // exponent > kBenchCeiling
};

inline constexpr double kBenchCeiling = 2.4;

/// Pairwise assembly time against s; the exponent needs two distinct s > 0.
BenchReport bench(const RunConfig& cfg);

} // namespace soliton::cli

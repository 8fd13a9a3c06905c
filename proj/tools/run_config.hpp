#pragma once

// Resolved configuration of one CLI run. Values come from defaults, then a
// key=value file, then command-line flags; every key is also a --flag.

#include "soliton/model.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <string>
#include <vector>

namespace soliton::cli {

inline constexpr int kMaxParticles = 12;
inline constexpr int kMaxGridPoints = 4000;

struct RunConfig {
    std::string command;
    ModelParams params = default_params();
    std::filesystem::path out = "out";
    int threads = 1;
    std::uint64_t seed = 20170101;

    // validate
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int draws = 20;
    double tolerance = 1e-6;

    // matrix / spectrum
    std::string strategy = "cached";  // cached | pairwise
    bool carpet = true;

    // scan-delta, and the delta range of scan-n
    double delta_min = 0.01;
    double delta_max = 25.0;
    int delta_count = 26;
    std::string delta_spacing = "linear";  // linear | log

    // scan-n
    int n_min = 1;
    int n_max = 7;
    int max_strings = 120;
    double window_sigmas = 5.0;
    std::string objective = "max-condensate";  // max-condensate | min-variance
    int coarse_points = 41;
    int refine_steps = 30;

    // bench
    std::vector<int> bench_strings{4, 8, 16};
    int repeats = 3;

    static ModelParams default_params();
};

inline const std::vector<std::string> kCommands
    = {"matrix", "spectrum", "scan-delta", "scan-n", "validate", "bench"};

/// Every configurable key, in the order used for the canonical text.
const std::vector<std::string>& config_keys();
std::string help_for(const std::string& key);

/// Parses one value into cfg; ConfigError names the field.
void set_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// key=value lines, '#' starts a comment; errors carry the line number.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Canonical key = value text, one key per line (without the output path).
std::string canonical_text(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

/// Defaults, then the file (if any), then the flags in order.
RunConfig resolve(const std::string& command, const std::filesystem::path& file,
                  const std::vector<std::pair<std::string, std::string>>& flags);

/// Model validity plus the resource guards; ConfigError otherwise.
void check(const RunConfig& cfg);

} // namespace soliton::cli

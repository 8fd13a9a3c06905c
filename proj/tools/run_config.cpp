#include "run_config.hpp"

#include "soliton/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace soliton::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected)
{
    throw ConfigError("field '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& value, const char* expected)
{
    T out{};
    const char* first = value.data();
    const char* last = first + value.size();
    if (!value.empty() && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || value.empty())
        bad_value(key, value, expected);
    return out;
}

int parse_int(const std::string& key, const std::string& v) { return parse_number<int>(key, v, "an integer"); }
double parse_double(const std::string& key, const std::string& v)
{
    return parse_number<double>(key, v, "a number");
}

std::string choice(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed)
{
    for (const char* a : allowed)
        if (v == a)
            return v;
    std::string list;
    for (const char* a : allowed)
        list += (list.empty() ? "" : " | ") + std::string(a);
    bad_value(key, v, "one of " + list);
}

std::string num(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Field {
    std::string key;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define INT_FIELD(name, member, text)                                                         \
    Field{name, text, [](RunConfig& c, const std::string& v) { c.member = parse_int(name, v); }, \
          [](const RunConfig& c) { return std::to_string(c.member); }}
#define DOUBLE_FIELD(name, member, text)                                                         \
    Field{name, text, [](RunConfig& c, const std::string& v) { c.member = parse_double(name, v); }, \
          [](const RunConfig& c) { return num(c.member); }}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        INT_FIELD("particles", params.particles, "number of bosons N"),
        DOUBLE_FIELD("box-half-length", params.half_length, "box [-L, L]"),
        DOUBLE_FIELD("coupling", params.coupling, "interaction strength c < 0"),
        DOUBLE_FIELD("delta", params.delta, "Gaussian momentum width"),
        INT_FIELD("strings", params.strings, "string window size s"),
        INT_FIELD("center-index", params.center_index, "window centre n0"),
        DOUBLE_FIELD("grid-spacing", params.grid_spacing, "grid spacing dx"),
        Field{"lattice", "momentum lattice: total (N p = pi n / L) or string (p = pi n / L)",
              [](RunConfig& c, const std::string& v) {
                  c.params.lattice = choice("lattice", v, {"total", "string"}) == "total"
                                         ? MomentumLattice::Total
                                         : MomentumLattice::String;
              },
              [](const RunConfig& c) {
                  return std::string(c.params.lattice == MomentumLattice::Total ? "total" : "string");
              }},
        INT_FIELD("threads", threads, "worker threads"),
        Field{"seed", "seed of the random validation draws",
              [](RunConfig& c, const std::string& v) {
                  c.seed = parse_number<std::uint64_t>("seed", v, "a non-negative integer");
              },
              [](const RunConfig& c) { return std::to_string(c.seed); }},
        DOUBLE_FIELD("rel-tol", rel_tol, "quadrature relative tolerance"),
        DOUBLE_FIELD("abs-tol", abs_tol, "quadrature absolute tolerance"),
        INT_FIELD("draws", draws, "random draws per N in validate"),
        DOUBLE_FIELD("tolerance", tolerance, "pass threshold of validate rows"),
        Field{"strategy", "matrix assembly: cached or pairwise",
              [](RunConfig& c, const std::string& v) { c.strategy = choice("strategy", v, {"cached", "pairwise"}); },
              [](const RunConfig& c) { return c.strategy; }},
        Field{"carpet", "write carpet.csv (true/false)",
              [](RunConfig& c, const std::string& v) {
                  c.carpet = choice("carpet", v, {"true", "false", "1", "0"}) == "true" || v == "1";
              },
              [](const RunConfig& c) { return std::string(c.carpet ? "true" : "false"); }},
        DOUBLE_FIELD("delta-min", delta_min, "smallest delta of a scan"),
        DOUBLE_FIELD("delta-max", delta_max, "largest delta of a scan"),
        INT_FIELD("delta-count", delta_count, "number of deltas in scan-delta"),
        Field{"delta-spacing", "linear or log spacing of scan-delta",
              [](RunConfig& c, const std::string& v) {
                  c.delta_spacing = choice("delta-spacing", v, {"linear", "log"});
              },
              [](const RunConfig& c) { return c.delta_spacing; }},
        INT_FIELD("n-min", n_min, "smallest N of scan-n"),
        INT_FIELD("n-max", n_max, "largest N of scan-n"),
        INT_FIELD("max-strings", max_strings, "cap on s in scan-n"),
        DOUBLE_FIELD("window-sigmas", window_sigmas, "scan-n window in weight standard deviations (0: s = max-strings)"),
        Field{"objective", "scan-n optimum: max-condensate or min-variance",
              [](RunConfig& c, const std::string& v) {
                  c.objective = choice("objective", v, {"max-condensate", "min-variance"});
              },
              [](const RunConfig& c) { return c.objective; }},
        INT_FIELD("coarse-points", coarse_points, "log-spaced deltas before refinement in scan-n"),
        INT_FIELD("refine-steps", refine_steps, "golden-section steps in scan-n"),
        Field{"bench-strings", "comma-separated s values timed by bench",
              [](RunConfig& c, const std::string& v) {
                  std::vector<int> out;
                  std::stringstream in(v);
                  std::string item;
                  while (std::getline(in, item, ','))
                      out.push_back(parse_int("bench-strings", trim(item)));
                  if (out.empty())
                      bad_value("bench-strings", v, "a comma-separated list of integers");
                  c.bench_strings = out;
              },
              [](const RunConfig& c) {
                  std::string s;
                  for (int v : c.bench_strings)
                      s += (s.empty() ? "" : ",") + std::to_string(v);
                  return s;
              }},
        INT_FIELD("repeats", repeats, "timing repeats per s in bench"),
        Field{"out", "output directory",
              [](RunConfig& c, const std::string& v) {
                  if (v.empty())
                      bad_value("out", v, "a directory path");
                  c.out = v;
              },
              [](const RunConfig& c) { return c.out.string(); }},
    };
    return table;
}

#undef INT_FIELD
#undef DOUBLE_FIELD

const Field& field(const std::string& key)
{
    for (const auto& f : fields())
        if (f.key == key)
            return f;
    throw ConfigError("unknown field '" + key + "'");
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

ModelParams RunConfig::default_params()
{
    ModelParams p;
    p.particles = 6;
    p.half_length = 25.0;
    p.coupling = -0.5;
    p.grid_spacing = 0.3;
    p.center_index = 0;
    p.strings = 7;
    p.delta = 0.05;
    return p;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields())
            k.push_back(f.key);
        return k;
    }();
    return keys;
}

std::string help_for(const std::string& key)
{
    return field(key).help;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    field(key).set(cfg, trim(value));
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(number) + ": ";
        if (eq == std::string::npos)
            throw ConfigError(where + "expected key = value, got '" + line + "'");
        try {
            set_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str(), path.string());
}

RunConfig resolve(const std::string& command, const std::filesystem::path& file,
                  const std::vector<std::pair<std::string, std::string>>& flags)
{
    RunConfig cfg;
    cfg.command = command;
    if (!file.empty())
        apply_config_file(cfg, file);
    for (const auto& [key, value] : flags)
        set_value(cfg, key, value);
    return cfg;
}

std::string canonical_text(const RunConfig& cfg)
{
    std::string out;
    for (const auto& f : fields())
        if (f.key != "out")
            out += f.key + " = " + f.get(cfg) + "\n";
    return out;
}

std::string config_hash(const RunConfig& cfg)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.command + "\n" + canonical_text(cfg))));
    return buf;
}

void check(const RunConfig& cfg)
{
    const ModelParams& p = cfg.params;
    const double cL = std::abs(p.coupling) * p.half_length;
    std::ostringstream why;
    if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end())
        throw ConfigError("unknown command '" + cfg.command + "'");
    const int top = cfg.command == "scan-n" ? std::max(cfg.n_max, p.particles) : p.particles;
    if (top > kMaxParticles) {
        why << "refusing N = " << top << " > " << kMaxParticles
            << ": the form-factor tables grow like N^3 per momentum difference and need a box with |c| L >> 1 "
               "(here |c| L = "
            << cL << ")";
        throw ConfigError(why.str());
    }
    if (p.half_length > 0 && p.grid_spacing > 0 && p.grid_size() > kMaxGridPoints) {
        why << "refusing a grid of " << p.grid_size() << " > " << kMaxGridPoints
            << " points (L / dx = " << p.half_length / p.grid_spacing << ", |c| L = " << cL
            << "); a coarser dx resolves the soliton as long as dx << 1 / (|c| N)";
        throw ConfigError(why.str());
    }
    if (cfg.threads < 1)
        throw ConfigError("field 'threads': must be >= 1");
    if (cfg.command == "scan-n") {
        if (cfg.n_min < 1 || cfg.n_max < cfg.n_min)
            throw ConfigError("scan-n needs 1 <= n-min <= n-max");
        if (cfg.max_strings < 0 || cfg.window_sigmas < 0)
            throw ConfigError("scan-n needs max-strings >= 0 and window-sigmas >= 0");
        if (!(cfg.delta_min > 0) || !(cfg.delta_max > cfg.delta_min))
            throw ConfigError("scan-n needs 0 < delta-min < delta-max");
    }
    if (cfg.command == "scan-delta") {
        if (cfg.delta_count < 1 || !(cfg.delta_min > 0) || cfg.delta_max < cfg.delta_min)
            throw ConfigError("scan-delta needs delta-count >= 1 and 0 < delta-min <= delta-max");
        if (cfg.delta_count > 1 && !(cfg.delta_max > cfg.delta_min))
            throw ConfigError("scan-delta with several points needs delta-min < delta-max");
    }
    if (cfg.command == "bench") {
        if (cfg.repeats < 1)
            throw ConfigError("field 'repeats': must be >= 1");
        for (int s : cfg.bench_strings)
            if (s < 0)
                throw ConfigError("field 'bench-strings': s must be >= 0");
    }
    if (cfg.command == "validate" && cfg.draws < 1)
        throw ConfigError("field 'draws': must be >= 1");

    ModelParams probe = p;
    if (cfg.command == "scan-delta" || cfg.command == "scan-n")
        probe.delta = cfg.delta_min;
    if (cfg.command != "validate")
        probe.validate();
}

} // namespace soliton::cli

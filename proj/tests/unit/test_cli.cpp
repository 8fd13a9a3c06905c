#include "commands.hpp"
#include "run_config.hpp"

#include "soliton/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace soliton;
using namespace soliton::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("soliton_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

RunConfig small(const std::string& command)
{
    RunConfig cfg;
    cfg.command = command;
    cfg.params.particles = 3;
    cfg.params.half_length = 12;
    cfg.params.coupling = -1;
    cfg.params.grid_spacing = 0.6;
    cfg.params.strings = 6;
    cfg.params.delta = 0.8;
    return cfg;
}

} // namespace

TEST_CASE("defaults follow the reference parameter set")
{
    const RunConfig cfg;
    CHECK(cfg.params.half_length == 25);
    CHECK(cfg.params.coupling == -0.5);
    CHECK(cfg.params.grid_spacing == 0.3);
    CHECK(cfg.params.center_index == 0);
    CHECK(cfg.params.lattice == MomentumLattice::Total);
}

TEST_CASE("config text with comments")
{
    RunConfig cfg;
    apply_config_text(cfg,
                      "# reference run\n"
                      "particles = 4   # N\n"
                      "\n"
                      "  coupling=-0.25\n"
                      "lattice = string\n"
                      "bench-strings = 2, 6,10\n",
                      "run.cfg");
    CHECK(cfg.params.particles == 4);
    CHECK(cfg.params.coupling == -0.25);
    CHECK(cfg.params.lattice == MomentumLattice::String);
    CHECK(cfg.bench_strings == std::vector<int>{2, 6, 10});
}

TEST_CASE("parse errors name the line and the field")
{
    RunConfig cfg;
    std::string what = error_of([&] { apply_config_text(cfg, "particles = 4\n\ndelta = fast\n", "run.cfg"); });
    CHECK(what.find("run.cfg:3") != std::string::npos);
    CHECK(what.find("'delta'") != std::string::npos);

    what = error_of([&] { apply_config_text(cfg, "# x\nwidth = 3\n", "run.cfg"); });
    CHECK(what.find("run.cfg:2") != std::string::npos);
    CHECK(what.find("unknown field 'width'") != std::string::npos);

    what = error_of([&] { apply_config_text(cfg, "particles 4\n", "run.cfg"); });
    CHECK(what.find("run.cfg:1") != std::string::npos);

    CHECK_FALSE(error_of([&] { set_value(cfg, "strings", "7.5"); }).empty());
    CHECK_FALSE(error_of([&] { set_value(cfg, "objective", "fastest"); }).empty());
    CHECK_FALSE(error_of([&] { apply_config_file(cfg, "/nonexistent/run.cfg"); }).empty());
}

TEST_CASE("flags override the config file")
{
    const auto dir = scratch("override");
    fs::create_directories(dir);
    const auto file = dir / "run.cfg";
    std::ofstream(file) << "particles = 4\ndelta = 0.5\nstrings = 10\n";
    const RunConfig cfg = resolve("spectrum", file, {{"delta", "2"}, {"threads", "3"}});
    CHECK(cfg.command == "spectrum");
    CHECK(cfg.params.particles == 4);
    CHECK(cfg.params.strings == 10);
    CHECK(cfg.params.delta == 2.0);
    CHECK(cfg.threads == 3);
    fs::remove_all(dir);
}

TEST_CASE("resource guards refuse loudly")
{
    RunConfig cfg = small("spectrum");
    cfg.params.particles = 13;
    std::string what = error_of([&] { check(cfg); });
    CHECK(what.find("N = 13") != std::string::npos);
    CHECK(what.find("|c| L") != std::string::npos);

    cfg = small("scan-n");
    cfg.n_max = 14;
    CHECK(error_of([&] { check(cfg); }).find("N = 14") != std::string::npos);

    cfg = small("matrix");
    cfg.params.grid_spacing = 0.001;
    what = error_of([&] { check(cfg); });
    CHECK(what.find("4000") != std::string::npos);
    CHECK(what.find("|c| L") != std::string::npos);

    cfg = small("matrix");
    cfg.params.coupling = 0.5;
    CHECK_FALSE(error_of([&] { check(cfg); }).empty());
    cfg = small("launch");
    CHECK_FALSE(error_of([&] { check(cfg); }).empty());
    CHECK_NOTHROW(check(small("matrix")));
}

TEST_CASE("config hash ignores the output directory only")
{
    RunConfig a = small("matrix"), b = small("matrix");
    b.out = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.params.delta = 0.81;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.command = "spectrum";
    CHECK(config_hash(a) != config_hash(b));
    CHECK(canonical_text(a).find("out =") == std::string::npos);
}

TEST_CASE("identical runs write byte-identical outputs")
{
    for (const char* command : {"matrix", "spectrum", "scan-delta"}) {
        RunConfig cfg = small(command);
        cfg.delta_count = 9;
        cfg.delta_max = 4;
        std::ostringstream log;
        const auto a = scratch(std::string("det_a_") + command);
        const auto b = scratch(std::string("det_b_") + command);
        cfg.out = a;
        const RunResult first = run(cfg, log);
        cfg.out = b;
        const RunResult second = run(cfg, log);
        CHECK(first.exit_code == 0);
        CHECK(first.artifacts == second.artifacts);
        for (const auto& name : first.artifacts)
            if (name != "manifest.txt")
                CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);

        const std::string manifest = slurp(a / "manifest.txt");
        CHECK(manifest.find("config_hash = " + config_hash(cfg)) != std::string::npos);
        CHECK(manifest.find(std::string("version = ") + SOLITON_VERSION) != std::string::npos);
        CHECK(manifest.find("runtime_seconds = ") != std::string::npos);
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST_CASE("matrix writes the binary container and both CSV exports")
{
    RunConfig cfg = small("matrix");
    cfg.out = scratch("matrix");
    std::ostringstream log;
    const RunResult result = run(cfg, log);
    CHECK(result.exit_code == 0);
    for (const char* name : {"matrix.bin", "profile.csv", "carpet.csv", "manifest.txt"})
        CHECK(fs::exists(cfg.out / name));
    fs::remove_all(cfg.out);
}

TEST_CASE("scan-n writes the power-law fit and the variance table")
{
    RunConfig cfg = small("scan-n");
    cfg.n_min = 2;
    cfg.n_max = 3;
    cfg.max_strings = 20;
    cfg.coarse_points = 9;
    cfg.refine_steps = 6;
    cfg.delta_max = 20;
    cfg.out = scratch("scan_n");
    std::ostringstream log;
    const RunResult result = run(cfg, log);
    CHECK(result.exit_code == 0);
    const std::string fit = slurp(cfg.out / "fit.json");
    CHECK(fit.find("\"beta\"") != std::string::npos);
    std::istringstream var(slurp(cfg.out / "variance.csv"));
    std::string line;
    std::getline(var, line);
    CHECK(line == "particles,variance,hf_variance,ratio");
    int rows = 0;
    while (std::getline(var, line))
        ++rows;
    CHECK(rows == 2);
    fs::remove_all(cfg.out);
}

TEST_CASE("bench with a single s reports a table without an exponent")
{
    RunConfig cfg = small("bench");
    cfg.bench_strings = {4};
    cfg.repeats = 1;
    const BenchReport report = bench(cfg);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].strings == 4);
    CHECK(report.rows[0].seconds > 0);
    CHECK_FALSE(report.has_exponent);
    CHECK_FALSE(report.regression);

    cfg.out = scratch("bench");
    std::ostringstream log;
    CHECK(run(cfg, log).exit_code == 0);
    CHECK(log.str().find("undefined") != std::string::npos);
    fs::remove_all(cfg.out);
}

TEST_CASE("validate writes the report and passes at default tolerances")
{
    RunConfig cfg = small("validate");
    cfg.params = RunConfig::default_params();
    cfg.draws = 2;
    cfg.out = scratch("validate");
    std::ostringstream log;
    const RunResult result = run(cfg, log);
    CHECK(result.exit_code == 0);
    const std::string report = slurp(cfg.out / "validate_report.txt");
    CHECK(report.find("# seed 20170101") == 0);
    fs::remove_all(cfg.out);
}

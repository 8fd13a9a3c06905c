#include "commands.hpp"

#include "soliton/density_matrix.hpp"
#include "soliton/errors.hpp"
#include "soliton/oracle.hpp"
#include "soliton/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#ifndef SOLITON_VERSION
#define SOLITON_VERSION "unknown"
#endif

namespace soliton::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_text(const fs::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    return out;
}

AssemblyOptions assembly_options(const RunConfig& cfg)
{
    AssemblyOptions opt;
    opt.threads = cfg.threads;
    opt.strategy = cfg.strategy == "pairwise" ? AssemblyStrategy::Pairwise : AssemblyStrategy::DifferenceCached;
    return opt;
}

// Structural checks shared by matrix and spectrum.
void check_matrix(const DensityMatrix& dm, const SpectrumReport& spec, RunResult& result)
{
    const int N = dm.params.particles;
    if (dm.values != dm.values.adjoint())
        result.problems.push_back("matrix is not exactly Hermitian");
    const double lowest = spec.eigenvalues.size() ? spec.eigenvalues.minCoeff() : 0.0;
    if (lowest < -1e-8 * N)
        result.problems.push_back("smallest eigenvalue " + fmt(lowest) + " is below -1e-8 N");
    const double cL = std::abs(dm.params.coupling) * dm.params.half_length;
    const double miss = std::abs(dm.trace_estimate - N) / N;
    if (cL >= 10 && miss > 0.02)
        result.problems.push_back("dx tr rho = " + fmt(dm.trace_estimate) + " misses N = " + std::to_string(N)
                                  + " by more than 2%");
}

void run_matrix(const RunConfig& cfg, RunResult& result, std::ostream& log)
{
    const DensityMatrix dm = assemble(cfg.params, assembly_options(cfg));
    save(dm, cfg.out / "matrix.bin");
    write_profile_csv(dm, cfg.out / "profile.csv");
    result.artifacts = {"matrix.bin", "profile.csv"};
    if (cfg.carpet) {
        write_carpet_csv(dm, cfg.out / "carpet.csv");
        result.artifacts.push_back("carpet.csv");
    }
    const SpectrumReport spec = eigendecompose(dm, false);
    check_matrix(dm, spec, result);
    log << "grid points      " << dm.size() << "\n"
        << "dx tr rho        " << fmt(dm.trace_estimate) << "\n"
        << "c0/N             " << fmt(spec.condensate_fraction) << "\n";
}

void run_spectrum(const RunConfig& cfg, RunResult& result, std::ostream& log)
{
    const DensityMatrix dm = assemble(cfg.params, assembly_options(cfg));
    const SpectrumReport spec = eigendecompose(dm, false);
    write_spectrum_csv(spec, cfg.out / "spectrum.csv");
    write_profile_csv(dm, cfg.out / "profile.csv");
    result.artifacts = {"spectrum.csv", "profile.csv"};
    check_matrix(dm, spec, result);
    log << "dx tr rho        " << fmt(dm.trace_estimate) << "\n"
        << "c0/N             " << fmt(spec.condensate_fraction) << "\n"
        << "variance         " << fmt(spec.variance) << "\n";
    for (int i = 0; i < std::min<int>(4, int(spec.eigenvalues.size())); ++i)
        log << "c" << i << "               " << fmt(spec.eigenvalues[i]) << "\n";
}

std::vector<double> delta_axis(const RunConfig& cfg)
{
    std::vector<double> deltas(cfg.delta_count);
    const int n = cfg.delta_count;
    for (int k = 0; k < n; ++k) {
        const double t = n == 1 ? 0.0 : double(k) / (n - 1);
        deltas[k] = cfg.delta_spacing == "log"
                        ? std::exp(std::log(cfg.delta_min) + t * (std::log(cfg.delta_max) - std::log(cfg.delta_min)))
                        : cfg.delta_min + t * (cfg.delta_max - cfg.delta_min);
    }
    return deltas;
}

void run_scan_delta(const RunConfig& cfg, RunResult& result, std::ostream& log)
{
    const ScanResult scan = scan_delta(cfg.params, delta_axis(cfg), cfg.threads);
    write_scan_csv(scan, cfg.out / "scan.csv");
    result.artifacts = {"scan.csv"};
    const ScanPoint& best = scan.best_point();
    log << "max c0/N         " << fmt(best.condensate_fraction) << " at delta = " << fmt(best.delta) << "\n";
    if (scan.undersampled)
        log << "still rising at the largest delta: s is too small for this range\n";
    if (scan.points.size() >= 8) {
        const SaturationFit fit = saturation_fit(scan);
        open_text(cfg.out / "fit.json") << to_json(fit) << "\n";
        result.artifacts.push_back("fit.json");
        log << "saturation       " << fmt(fit.saturation) << (fit.converged ? "" : " (not converged)") << "\n";
    }
}

void run_scan_n(const RunConfig& cfg, RunResult& result, std::ostream& log)
{
    DeltaSearch search;
    search.objective = cfg.objective == "min-variance" ? DeltaSearch::Objective::MinVariance
                                                       : DeltaSearch::Objective::MaxCondensate;
    search.delta_min = cfg.delta_min;
    search.delta_max = cfg.delta_max;
    search.coarse_points = cfg.coarse_points;
    search.refine_steps = cfg.refine_steps;
    search.max_strings = cfg.max_strings;
    search.window_sigmas = cfg.window_sigmas;

    std::vector<int> Ns;
    for (int N = cfg.n_min; N <= cfg.n_max; ++N)
        Ns.push_back(N);
    const ScanResult scan = scan_particles(cfg.params, Ns, search, cfg.threads);
    write_scan_csv(scan, cfg.out / "scan.csv");
    result.artifacts = {"scan.csv"};

    auto var = open_text(cfg.out / "variance.csv");
    var << "particles,variance,hf_variance,ratio\n";
    for (const auto& p : scan.points) {
        var << p.particles << "," << fmt(p.variance);
        if (p.particles >= 2) {
            const double hf = hf_variance(p.particles, cfg.params.coupling);
            var << "," << fmt(hf) << "," << fmt(p.variance / hf);
        } else {
            var << ",,";
        }
        var << "\n";
        log << "N = " << p.particles << "  delta = " << fmt(p.delta) << "  s = " << p.strings
            << "  c0/N = " << fmt(p.condensate_fraction) << "  variance = " << fmt(p.variance) << "\n";
    }
    result.artifacts.push_back("variance.csv");

    std::vector<double> C;
    for (const auto& p : scan.points)
        C.push_back(p.condensate_fraction);
    try {
        const PowerLawFit fit = powerlaw_fit(Ns, C);
        open_text(cfg.out / "fit.json") << to_json(fit) << "\n";
        result.artifacts.push_back("fit.json");
        log << "1 - C = a N^-beta: a = " << fmt(fit.a) << ", beta = " << fmt(fit.beta)
            << ", residual norm = " << fmt(fit.residual_norm) << "\n";
    } catch (const DomainError& e) {
        log << "no power-law fit: " << e.what() << "\n";
    }
}

void run_validate(const RunConfig& cfg, RunResult& result, std::ostream& log)
{
    ValidationOptions opt;
    opt.draws = cfg.draws;
    opt.half_length = cfg.params.half_length;
    opt.coupling = cfg.params.coupling;
    opt.grid_spacing = cfg.params.grid_spacing;
    opt.seed = cfg.seed;
    opt.tolerance = cfg.tolerance;
    opt.quadrature.rel_tol = cfg.rel_tol;
    opt.quadrature.abs_tol = cfg.abs_tol;
    const auto rows = run_validation(opt);
    const std::string report = format_validation_report(rows);
    open_text(cfg.out / "validate_report.txt") << "# seed " << cfg.seed << "\n" << report;
    result.artifacts = {"validate_report.txt"};
    int failed = 0;
    for (const auto& r : rows)
        if (!r.pass) {
            ++failed;
            result.problems.push_back("validation row failed: " + r.name);
        }
    log << rows.size() - failed << " of " << rows.size() << " oracle rows pass\n";
}

void run_bench(const RunConfig& cfg, RunResult& result, std::ostream& log)
{
    const BenchReport report = bench(cfg);
    auto out = open_text(cfg.out / "bench.csv");
    out << "strings,seconds\n";
    log << "     s   seconds\n";
    for (const auto& r : report.rows) {
        out << r.strings << "," << fmt(r.seconds) << "\n";
        char line[64];
        std::snprintf(line, sizeof line, "%6d   %.6f\n", r.strings, r.seconds);
        log << line;
    }
    result.artifacts = {"bench.csv"};
    if (report.has_exponent) {
        log << "exponent         " << fmt(report.exponent) << "\n";
        if (report.regression)
            result.problems.push_back("assembly time grows like s^" + fmt(report.exponent) + ", above s^"
                                      + fmt(kBenchCeiling));
    } else {
        log << "exponent         undefined (needs two distinct s > 0)\n";
    }
}

void write_manifest(const RunConfig& cfg, const RunResult& result, double seconds)
{
    auto out = open_text(cfg.out / "manifest.txt");
    out << "command = " << cfg.command << "\n"
        << "version = " << SOLITON_VERSION << "\n"
        << "config_hash = " << config_hash(cfg) << "\n"
        << "runtime_seconds = " << fmt(seconds) << "\n"
        << "exit_code = " << result.exit_code << "\n"
        << "artifacts = ";
    for (std::size_t i = 0; i < result.artifacts.size(); ++i)
        out << (i ? "," : "") << result.artifacts[i];
    out << "\n";
    for (const auto& p : result.problems)
        out << "problem = " << p << "\n";
    out << "\n[config]\n" << canonical_text(cfg);
}

} // namespace

BenchReport bench(const RunConfig& cfg)
{
    BenchReport report;
    AssemblyOptions opt;
    opt.strategy = AssemblyStrategy::Pairwise;
    opt.threads = cfg.threads;
    for (int s : cfg.bench_strings) {
        ModelParams p = cfg.params;
        p.strings = s;
        double fastest = std::numeric_limits<double>::infinity();
        for (int r = 0; r < cfg.repeats; ++r) {
            const auto start = Clock::now();
            const DensityMatrix dm = assemble(p, opt);
            fastest = std::min(fastest, std::chrono::duration<double>(Clock::now() - start).count());
            (void)dm;
        }
        report.rows.push_back({s, fastest});
    }

    std::vector<double> lx, ly;
    for (const auto& r : report.rows)
        if (r.strings > 0 && r.seconds > 0) {
            lx.push_back(std::log(double(r.strings)));
            ly.push_back(std::log(r.seconds));
        }
    const int n = int(lx.size());
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (n >= 2 && sxx > 0) {
        report.has_exponent = true;
        report.exponent = sxy / sxx;
        report.regression = report.exponent > kBenchCeiling;
    }
    return report;
}

RunResult run(const RunConfig& cfg, std::ostream& log)
{
    check(cfg);
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec)
        throw IoError("cannot create output directory " + cfg.out.string() + ": " + ec.message());

    const auto start = Clock::now();
    RunResult result;
    if (cfg.command == "matrix")
        run_matrix(cfg, result, log);
    else if (cfg.command == "spectrum")
        run_spectrum(cfg, result, log);
    else if (cfg.command == "scan-delta")
        run_scan_delta(cfg, result, log);
    else if (cfg.command == "scan-n")
        run_scan_n(cfg, result, log);
    else if (cfg.command == "validate")
        run_validate(cfg, result, log);
    else
        run_bench(cfg, result, log);
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

    result.exit_code = result.problems.empty() ? 0 : kExitIntegrity;
    for (const auto& p : result.problems)
        log << "INTEGRITY FAILURE: " << p << "\n";
    write_manifest(cfg, result, seconds);
    result.artifacts.push_back("manifest.txt");
    return result;
}

} // namespace soliton::cli

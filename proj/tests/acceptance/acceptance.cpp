// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "commands.hpp"

#include "soliton/density_matrix.hpp"
#include "soliton/diagrams.hpp"
#include "soliton/errors.hpp"
#include "soliton/oracle.hpp"
#include "soliton/spectral.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace soliton;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int digits = 6)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// Count of steps going the wrong way, and whether each stays within slack.
bool nearly_monotone(const std::vector<double>& v, bool increasing, double slack)
{
    int violations = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double step = increasing ? v[i] - v[i - 1] : v[i - 1] - v[i];
        if (step < 0) {
            ++violations;
            if (-step > slack)
                return false;
        }
    }
    return violations <= 1;
}

ModelParams reference()
{
    ModelParams p;
    p.particles = 6;
    p.half_length = 25;
    p.coupling = -0.5;
    p.grid_spacing = 0.3;
    p.center_index = 0;
    return p;
}

Outcome oracle_equivalence()
{
    ValidationOptions opt;
    opt.particle_counts = {2, 3};
    opt.draws = 20;
    opt.half_length = 25;
    opt.coupling = -0.5;
    const auto rows = run_validation(opt);
    int total = 0, passed = 0;
    double worst = 0;
    for (const auto& r : rows)
        if (r.name.rfind("form_factor", 0) == 0) {
            ++total;
            passed += r.pass;
            worst = std::max(worst, r.difference);
        }
    return {total == 40 && passed == total,
            std::to_string(passed) + "/" + std::to_string(total) + " form factors, worst relative error "
                + num(worst) + ", seed " + std::to_string(opt.seed)};
}

Outcome diagram_consistency()
{
    std::mt19937_64 rng(20170101);
    std::uniform_real_distribution<double> unit(0, 1);
    double worst_distinct = 0;
    int widest = 0;
    for (int k = 0; k < 50; ++k) {
        const int N = 2 + int(unit(rng) * 10);
        const int m = int(unit(rng) * N);
        const int mp = std::min(N - 1, m + int(unit(rng) * 11));
        const double c = -(0.2 + unit(rng));
        double P = (unit(rng) - 0.5) * 2.0;
        if (P == 0.0)
            P = 0.1;
        const double x = -3 + 4 * unit(rng);
        const double xp = x + 1.5 + 3 * unit(rng);
        const auto terms = build_prefactors_distinct(m, mp, P, N, c);
        const cplx fact = evaluate_middle(terms, m, mp, P, N, c, x, xp);
        const cplx naive = enumerate_naive(m, mp, P, N, c, x, xp);
        worst_distinct = std::max(worst_distinct, std::abs(fact - naive) / std::abs(naive));
        widest = std::max(widest, mp - m);
    }
    // Every span up to ten columns at least once.
    for (int D = 0; D <= 10; ++D) {
        const int N = 11, m = 0, mp = D;
        const double c = -0.5, P = 0.37, x = -1.1, xp = 1.7;
        const auto terms = build_prefactors_distinct(m, mp, P, N, c);
        const cplx naive = enumerate_naive(m, mp, P, N, c, x, xp);
        worst_distinct = std::max(worst_distinct,
                                  std::abs(evaluate_middle(terms, m, mp, P, N, c, x, xp) - naive) / std::abs(naive));
    }

    double worst_same = 0;
    int same_cases = 0;
    for (int k = 0; k < 50; ++k) {
        const int N = 2 + int(unit(rng) * 8);
        const int m = int(unit(rng) * N);
        const int mp = std::min(N - 1, m + int(unit(rng) * 5));
        const double c = -(0.2 + unit(rng));
        const double x = -3 + 4 * unit(rng);
        const double xp = x + 0.5 + 3 * unit(rng);
        const auto terms = build_prefactors_same(m, mp, N, c);
        const auto q = quadrature_inner_integral(m, mp, 0.0, N, c, x, xp);
        if (!q.trusted)
            return {false, "untrusted quadrature at N=" + std::to_string(N)};
        worst_same = std::max(worst_same, std::abs(evaluate_middle(terms, x, xp) - q.value) / std::abs(q.value));
        ++same_cases;
    }
    return {worst_distinct <= 1e-12 && worst_same <= 1e-9,
            "distinct: worst " + num(worst_distinct) + " over 61 cases (m'-m up to 10); same momentum: worst "
                + num(worst_same) + " over " + std::to_string(same_cases) + " quadratures"};
}

Outcome norm_reproduction()
{
    double worst = 0;
    for (int N : {2, 3}) {
        const double exact = 1.0 / std::pow(string_norm(N, 25.0, -0.5), 2);
        const auto q = quadrature_norm(N, 25.0, -0.5, 0.3, {});
        if (!q.trusted)
            return {false, "untrusted quadrature at N=" + std::to_string(N)};
        worst = std::max(worst, std::abs(q.value.real() - exact) / exact);
    }
    return {worst <= 1e-6, "worst relative error " + num(worst)};
}

Outcome matrix_integrity()
{
    ModelParams p = reference();
    p.strings = 7;
    p.delta = 0.05;
    const DensityMatrix dm = assemble(p);
    const SpectrumReport spec = eigendecompose(dm, false);
    const bool hermitian = dm.values == dm.values.adjoint();
    const double lowest = spec.eigenvalues.minCoeff();
    const double miss = std::abs(dm.trace_estimate - 6) / 6;
    return {hermitian && lowest >= -1e-8 * 6 && miss <= 0.02,
            std::string("Hermitian ") + (hermitian ? "exact" : "broken") + ", min eigenvalue " + num(lowest)
                + ", trace error " + num(miss)};
}

ScanResult headline_scan;

Outcome condensate_maximum()
{
    ModelParams p = reference();
    p.strings = 120;
    std::vector<double> deltas;
    for (int k = 0; k <= 100; ++k)
        deltas.push_back(0.01 + k * (25.0 - 0.01) / 100);
    headline_scan = scan_delta(p, deltas, 4);
    const ScanPoint& best = headline_scan.best_point();
    const bool interior = headline_scan.best > 0 && headline_scan.best + 1 < int(deltas.size());
    return {best.condensate_fraction >= 0.965 && interior,
            "s = 120: max c0/N = " + num(best.condensate_fraction) + " at delta = " + num(best.delta)
                + (interior ? " (interior)" : " (at the range edge)") + ", c0/N = "
                + num(headline_scan.points.front().condensate_fraction) + " at delta = 0.01"};
}

Outcome saturation_trend()
{
    ModelParams p = reference();
    p.delta = headline_scan.points.empty() ? 16.0 : headline_scan.best_point().delta;
    const ScanResult scan = scan_strings(p, {4, 8, 16, 30});
    std::vector<double> c0, tail[3];
    for (const auto& pt : scan.points) {
        c0.push_back(pt.condensate_fraction);
        if (pt.strings >= 8)
            for (int i = 0; i < 3; ++i)
                tail[i].push_back(pt.leading[i + 1]);
    }
    bool ok = nearly_monotone(c0, true, 1e-4);
    for (auto& t : tail)
        ok = ok && nearly_monotone(t, false, 1e-4);
    std::ostringstream d;
    d << "delta = " << num(p.delta) << "; c0/N:";
    for (double v : c0)
        d << " " << num(v);
    d << "; c1:";
    for (double v : tail[0])
        d << " " << num(v);
    return {ok, d.str()};
}

Outcome power_law()
{
    DeltaSearch search;
    search.max_strings = 120;
    const std::vector<int> Ns{1, 2, 3, 4, 5, 6, 7};
    const ScanResult scan = scan_particles(reference(), Ns, search, 4);
    std::vector<double> C;
    for (const auto& pt : scan.points)
        C.push_back(pt.condensate_fraction);
    const PowerLawFit fit = powerlaw_fit(Ns, C);
    std::ostringstream d;
    d << "a = " << num(fit.a) << ", beta = " << num(fit.beta) << " +- " << num(fit.beta_error, 2)
      << ", residual norm " << num(fit.residual_norm, 3) << ", residuals";
    for (double r : fit.residuals)
        d << " " << num(r, 2);
    d << "; C(N):";
    for (double v : C)
        d << " " << num(v, 5);
    return {fit.a >= 0.02 && fit.a <= 0.06 && fit.beta >= 0.29 && fit.beta <= 0.59, d.str()};
}

Outcome variance_convergence()
{
    DeltaSearch search;
    search.objective = DeltaSearch::Objective::MinVariance;
    search.window_sigmas = 0;
    search.max_strings = 120;
    std::vector<int> Ns;
    for (int N = 4; N <= 10; ++N)
        Ns.push_back(N);
    const ScanResult scan = scan_particles(reference(), Ns, search, 4);
    std::vector<double> gap;
    std::ostringstream d;
    d << "sigma^2 / sigma^2_HF:";
    for (const auto& pt : scan.points) {
        const double ratio = pt.variance / hf_variance(pt.particles, -0.5);
        gap.push_back(std::abs(ratio - 1));
        d << " " << num(ratio, 4);
    }
    const double last = scan.points.back().variance;
    d << "; N = 10: sigma^2 = " << num(last) << " vs " << num(hf_variance(10, -0.5));
    int inversions = 0;
    for (std::size_t i = 1; i < gap.size(); ++i)
        inversions += gap[i] > gap[i - 1];
    return {gap.back() <= 0.25 && inversions <= 1, d.str()};
}

Outcome single_particle_purity()
{
    ModelParams p = reference();
    p.particles = 1;
    // A packet that vanishes at the box edge and whose weights vanish at the
    // window edge, so the Riemann trace is exact to round-off.
    p.strings = 40;
    p.delta = 0.25;
    const SpectrumReport spec = eigendecompose(assemble(p), false);
    const double c0 = spec.condensate_fraction;
    const double c1 = spec.eigenvalues[1];
    return {std::abs(c0 - 1) <= 1e-10 && c1 <= 1e-10,
            "c0/N - 1 = " + num(c0 - 1) + ", c1 = " + num(c1)};
}

Outcome performance_scaling()
{
    cli::RunConfig cfg;
    cfg.command = "bench";
    cfg.params = reference();
    cfg.bench_strings = {4, 8, 16};
    cfg.repeats = 3;
    const cli::BenchReport report = cli::bench(cfg);
    std::ostringstream d;
    d << "exponent " << num(report.exponent, 4) << "; seconds:";
    for (const auto& r : report.rows)
        d << " s=" << r.strings << ":" << num(r.seconds, 3);
    return {report.has_exponent && report.exponent >= 1.6 && report.exponent <= 2.4, d.str()};
}

} // namespace

int main(int argc, char** argv)
{
    set_warning_sink([](const std::string&) {});
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"oracle equivalence", oracle_equivalence},
        {"diagram self-consistency", diagram_consistency},
        {"norm reproduction", norm_reproduction},
        {"matrix integrity", matrix_integrity},
        {"condensate-fraction maximum", condensate_maximum},
        {"eigenvalue saturation trend", saturation_trend},
        {"power-law fit", power_law},
        {"variance convergence", variance_convergence},
        {"N=1 purity", single_particle_purity},
        {"performance scaling", performance_scaling},
    };

    // Optional list of criterion numbers to run.
    std::vector<bool> selected(criteria.size(), argc == 1);
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k >= 1 && k <= int(criteria.size()))
            selected[k - 1] = true;
    }

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i])
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !out.pass;
        std::cout << "criterion " << i + 1 << " " << (out.pass ? "PASS" : "FAIL") << " " << criteria[i].first
                  << ": " << out.detail << " [" << num(seconds, 3) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}

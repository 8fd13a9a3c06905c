#include "soliton/errors.hpp"
#include "soliton/spectral.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace soliton;
namespace fs = std::filesystem;

namespace {

// Routes warnings into a string for the lifetime of the object.
struct CaptureWarnings {
    std::string text;
    WarningSink previous;
    CaptureWarnings()
        : previous(set_warning_sink([this](const std::string& m) { text += m + "\n"; }))
    {
    }
    ~CaptureWarnings() { set_warning_sink(previous); }
};

ModelParams small(int N, int strings, double delta)
{
    ModelParams p;
    p.particles = N;
    p.half_length = 12.0;
    p.coupling = -1.0;
    p.grid_spacing = 0.6;
    p.strings = strings;
    p.delta = delta;
    return p;
}

DensityMatrix synthetic(const Eigen::MatrixXcd& values, double dx, int N)
{
    DensityMatrix dm;
    dm.params.particles = N;
    dm.params.grid_spacing = dx;
    dm.values = values;
    const int M = int(values.rows());
    for (int k = 0; k < M; ++k)
        dm.grid.push_back((k - M / 2) * dx);
    return dm;
}

double saturation_model(double A, const double* B, const double* tau, double x)
{
    double v = A;
    for (int i = 0; i < 3; ++i)
        v += B[i] * (1 - std::exp(-x / tau[i]));
    return v;
}

} // namespace

TEST_CASE("a single particle is a pure state")
{
    const DensityMatrix dm = assemble(small(1, 40, 1.0));
    const SpectrumReport r = eigendecompose(dm);
    CHECK(std::abs(r.condensate_fraction - 1) <= 1e-10);
    CHECK(std::abs(r.eigenvalues[1]) <= 1e-10);
}

TEST_CASE("rank-one synthetic matrix")
{
    const int M = 41;
    const double dx = 0.25, N = 3;
    Eigen::VectorXcd v(M);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    for (int k = 0; k < M; ++k)
        v[k] = cplx(g(rng), g(rng));
    v *= std::sqrt(N / (dx * v.squaredNorm()));
    const SpectrumReport r = eigendecompose(synthetic(v * v.adjoint(), dx, 3));
    CHECK(r.eigenvalues[0] == doctest::Approx(N).epsilon(1e-12));
    CHECK(std::abs(r.eigenvalues[1]) <= 1e-12);
    // The leading orbital is v up to a phase.
    const cplx overlap = dx * r.orbitals.col(0).dot(v) / std::sqrt(N);
    CHECK(std::abs(overlap) == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("spectral invariants on an assembled matrix")
{
    const DensityMatrix dm = assemble(small(3, 10, 1.5));
    const SpectrumReport r = eigendecompose(dm);
    const int M = dm.size();
    for (int i = 1; i < M; ++i)
        CHECK(r.eigenvalues[i] <= r.eigenvalues[i - 1]);
    CHECK(r.eigenvalues.sum() == doctest::Approx(dm.trace_estimate).epsilon(1e-10));
    CHECK(r.eigenvalues.minCoeff() >= -1e-8 * 3);
    const Eigen::MatrixXcd gram = dm.spacing() * r.orbitals.adjoint() * r.orbitals;
    CHECK((gram - Eigen::MatrixXcd::Identity(M, M)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(r.condensate_fraction == doctest::Approx(r.eigenvalues[0] / 3));
}

TEST_CASE("non-Hermitian input is an integrity error")
{
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(5, 5);
    m(0, 3) = cplx(0, 1e-6);
    CHECK_THROWS_AS(eigendecompose(synthetic(m, 0.5, 1)), IntegrityError);
}

TEST_CASE("condensate fraction does not depend on the window centre")
{
    ModelParams p = small(3, 10, 1.5);
    const SpectrumReport a = eigendecompose(assemble(p), false);
    p.center_index = 3;
    const SpectrumReport b = eigendecompose(assemble(p), false);
    CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("spatial variance")
{
    SUBCASE("uniform density")
    {
        const int K = 400;
        const double h = 0.01, a = K * h, N = 4;
        std::vector<double> grid, rho;
        for (int k = -K; k <= K; ++k) {
            grid.push_back(k * h);
            rho.push_back(N / (h * (2 * K + 1)));
        }
        // The discrete moment is h^2 K (K + 1) / 3.
        CHECK(spatial_variance(grid, rho, h, 4) == doctest::Approx(h * h * K * (K + 1) / 3).epsilon(1e-12));
        CHECK(std::abs(spatial_variance(grid, rho, h, 4) - a * a / 3) <= a * a / 3 / K * 1.01);
    }
    SUBCASE("symmetric profile has no first moment")
    {
        const DensityMatrix dm = assemble(small(3, 8, 2.0));
        const auto rho = density_profile(dm);
        double m1 = 0;
        for (int k = 0; k < dm.size(); ++k)
            m1 += dm.spacing() * dm.grid[k] * rho[k] / 3;
        CHECK(std::abs(m1) <= 1e-8);
        CHECK(spatial_variance(dm) > 0);
    }
}

TEST_CASE("mean-field variance")
{
    CHECK(hf_variance(2, -0.5) == doctest::Approx(13.1595).epsilon(1e-5));
    CHECK(hf_variance(10, -0.5) == doctest::Approx(0.16246).epsilon(1e-4));
    CHECK(hf_variance(7, -1.0) == doctest::Approx(hf_variance(7, -0.5) / 4));
    CHECK_THROWS_AS(hf_variance(1, -0.5), DomainError);
}

TEST_CASE("delta scan finds an interior maximum")
{
    ModelParams p = small(3, 60, 0);
    const ScanResult scan = scan_delta(p, {0.01, 0.1, 0.5, 2, 6, 20, 60}, 2);
    REQUIRE(scan.points.size() == 7);
    CHECK(scan.best > 0);
    CHECK(scan.best < 6);
    CHECK(scan.points.front().condensate_fraction < scan.best_point().condensate_fraction - 0.1);
    CHECK_FALSE(scan.undersampled);
    CHECK_THROWS_AS(scan_delta(p, {1.0, 0.5}), DomainError);
}

TEST_CASE("delta scan flags a still-rising end")
{
    CaptureWarnings seen;
    const ScanResult scan = scan_delta(small(3, 60, 0), {0.01, 0.05, 0.1});
    CHECK(scan.undersampled);
    CHECK(seen.text.find("under-sampled") != std::string::npos);
}

TEST_CASE("scan over s matches individual assemblies")
{
    ModelParams p = small(3, 0, 1.0);
    const ScanResult scan = scan_strings(p, {2, 6, 12});
    for (const auto& pt : scan.points) {
        ModelParams q = p;
        q.strings = pt.strings;
        CHECK(pt.condensate_fraction == doctest::Approx(eigendecompose(assemble(q), false).condensate_fraction));
    }
    CHECK(scan.points[2].condensate_fraction > scan.points[0].condensate_fraction);
}

TEST_CASE("delta search")
{
    ModelParams p = small(2, 0, 0);
    DeltaSearch search;
    search.max_strings = 200;
    CHECK(search_strings(p, search, 0.5) == 2 * int(std::ceil(5 * 12 * std::sqrt(0.25) / kPi)));
    CHECK(search_strings(p, search, 1e6) == 200);
    const ScanPoint best = optimize_delta(p, search);
    CHECK(best.delta > search.delta_min);
    CHECK(best.delta < search.delta_max);
    // Nudging delta either way lowers c0/N.
    for (double f : {0.8, 1.25}) {
        ModelParams q = p;
        q.delta = best.delta * f;
        q.strings = search_strings(p, search, q.delta);
        CHECK(eigendecompose(assemble(q), false).condensate_fraction <= best.condensate_fraction + 1e-12);
    }

    search.objective = DeltaSearch::Objective::MinVariance;
    search.window_sigmas = 0;
    search.max_strings = 30;
    const ScanPoint narrow = optimize_delta(p, search);
    CHECK(narrow.strings == 30);
    ModelParams q = p;
    q.strings = 30;
    q.delta = narrow.delta * 1.3;
    CHECK(spatial_variance(assemble(q)) >= narrow.variance - 1e-12);
}

TEST_CASE("saturation fit recovers synthetic parameters")
{
    const double A = 0.3, B[3] = {0.3, 0.2, 0.15}, tau[3] = {0.5, 4.0, 30.0};
    std::vector<double> x, y;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0, 1e-4);
    for (int k = 0; k < 200; ++k) {
        x.push_back(0.01 * std::pow(10.0, 4.5 * k / 199));
        y.push_back(saturation_model(A, B, tau, x.back()) + noise(rng));
    }
    const SaturationFit fit = saturation_fit(x, y);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.offset - A) <= 0.05 * A);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(fit.amplitude[i] - B[i]) <= 0.05 * B[i]);
        CHECK(std::abs(fit.time_scale[i] - tau[i]) <= 0.05 * tau[i]);
    }
    CHECK(fit.saturation == doctest::Approx(0.95).epsilon(0.01));
    CHECK(fit.residual_norm <= 3e-4 * std::sqrt(200.0));
}

TEST_CASE("saturation fit edge cases")
{
    std::vector<double> x, flat, rising;
    for (int k = 1; k <= 12; ++k) {
        x.push_back(k);
        flat.push_back(0.7);
        rising.push_back(0.9 - 0.3 * std::exp(-k / 3.0));
    }
    const SaturationFit c = saturation_fit(x, flat);
    CHECK(c.offset == doctest::Approx(0.7).epsilon(1e-10));
    for (double b : c.amplitude)
        CHECK(std::abs(b) <= 1e-8);

    const SaturationFit r = saturation_fit(x, rising);
    CHECK(r.converged);
    CHECK(r.saturation >= rising.back() - 1e-9);

    CHECK_THROWS_AS(saturation_fit(std::vector<double>(7, 1.0), std::vector<double>(7, 1.0)), DomainError);
    const auto parsed = nlohmann::json::parse(to_json(r));
    CHECK(parsed["saturation"].get<double>() == doctest::Approx(r.saturation));
    CHECK(parsed["tau"].size() == 3);
}

TEST_CASE("power-law fit")
{
    std::vector<int> N = {1, 2, 3, 4, 5, 6, 7};
    std::vector<double> C;
    for (int n : N)
        C.push_back(1 - 0.04 * std::pow(n, -0.44));
    const PowerLawFit fit = powerlaw_fit(N, C);
    CHECK(std::abs(fit.a - 0.04) <= 1e-6);
    CHECK(std::abs(fit.beta - 0.44) <= 1e-6);
    CHECK(fit.residual_norm <= 1e-10);

    CaptureWarnings seen;
    C[0] = 1.0;
    C[3] = 1.0 + 1e-12;
    const PowerLawFit cut = powerlaw_fit(N, C);
    CHECK(cut.excluded == std::vector<int>{1, 4});
    CHECK(cut.used.size() == 5);
    CHECK(seen.text.find("excluding N = 1") != std::string::npos);
    CHECK(std::abs(cut.beta - 0.44) <= 1e-6);

    CHECK_THROWS_AS(powerlaw_fit({3}, {0.98}), DomainError);
    CHECK_THROWS_AS(powerlaw_fit({2, 3}, {1.0, 0.98}), DomainError);
    const auto parsed = nlohmann::json::parse(to_json(fit));
    CHECK(parsed["beta"].get<double>() == doctest::Approx(0.44));
}

TEST_CASE("spectrum and scan CSV")
{
    const DensityMatrix dm = assemble(small(2, 4, 0.5));
    const auto path = fs::temp_directory_path() / "soliton_test_spectrum.csv";
    write_spectrum_csv(eigendecompose(dm, false), path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,eigenvalue");
    std::getline(in, line);
    CHECK(line.rfind("0,", 0) == 0);

    const ScanResult scan = scan_delta(small(2, 4, 0), {0.1, 0.2});
    write_scan_csv(scan, path);
    std::ifstream in2(path);
    std::getline(in2, line);
    CHECK(line == "delta,c0_over_N,variance,delta,strings,c1,c2,c3");
    fs::remove(path);
}

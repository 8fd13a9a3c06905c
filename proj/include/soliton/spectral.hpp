#pragma once

// Spectra of the density matrix and the derived physics: condensate fraction,
// spatial variance, scans over delta / s / N, and the two fits used to
// extrapolate the maximal condensate fraction.

#include "soliton/density_matrix.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace soliton {

struct SpectrumReport {
    Eigen::VectorXd eigenvalues;  // of dx * rho, descending; they sum to dx tr rho
    Eigen::MatrixXcd orbitals;    // columns, dx * sum |phi|^2 = 1; empty if not requested
    double condensate_fraction = 0;
    double variance = 0;
    ModelParams params;
};

/// Throws IntegrityError when rho is not Hermitian to 1e-10 of its largest entry.
/// Equal eigenvalues keep the solver's order; orbitals inside a degenerate
/// block are any orthonormal basis of it.
SpectrumReport eigendecompose(const DensityMatrix& dm, bool with_orbitals = true);

/// (dx/N) sum x^2 rho(x, x) - [(dx/N) sum x rho(x, x)]^2.
double spatial_variance(const DensityMatrix& dm);
double spatial_variance(const std::vector<double>& grid, const std::vector<double>& density, double spacing,
                        int particles);

/// Mean-field soliton variance pi^2 / (3 c^2 (N-1)^2); N = 1 is a DomainError.
double hf_variance(int particles, double coupling);

struct ScanPoint {
    double axis = 0;
    double condensate_fraction = 0;
    double variance = 0;
    std::array<double, 4> leading{};  // c_0 .. c_3
    double delta = 0;
    int strings = 0;
    int particles = 0;
};

struct ScanResult {
    std::string axis_name;  // "delta", "strings" or "particles"
    std::vector<ScanPoint> points;
    int best = -1;              // argmax of the condensate fraction
    bool undersampled = false;  // still rising at the end of a delta scan

    const ScanPoint& best_point() const { return points.at(best); }
};

/// One kernel, one contraction per delta. params.strings is held fixed.
/// Warns (and sets undersampled) when c_0/N still grows by more than 0.1% over
/// the last step.
ScanResult scan_delta(const ModelParams& params, const std::vector<double>& deltas, int threads = 1);

/// Fixed delta, one contraction per s.
ScanResult scan_strings(const ModelParams& params, const std::vector<int>& strings, int threads = 1);

struct DeltaSearch {
    // MaxCondensate ranks points by c_0 / (dx tr rho), so the grid's trace
    // error cannot pull the optimum; the reported fraction is still c_0 / N.
    enum class Objective { MaxCondensate, MinVariance };
    Objective objective = Objective::MaxCondensate;
    double delta_min = 0.01;
    double delta_max = 200.0;
    int coarse_points = 41;  // log-spaced
    int refine_steps = 30;   // golden section in log delta
    int max_strings = 120;
    // s grows with delta so the window covers this many standard deviations of
    // the weights; 0 keeps s = max_strings throughout.
    double window_sigmas = 5.0;
    // Points whose trace misses N by more than this are skipped.
    double trace_tolerance = 0.02;
};

/// Window size the search uses at a given delta.
int search_strings(const ModelParams& params, const DeltaSearch& search, double delta);

/// Optimum over delta for params.particles; the point carries delta and s.
ScanPoint optimize_delta(const ModelParams& params, const DeltaSearch& search, int threads = 1);

/// optimize_delta for every N, axis = N.
ScanResult scan_particles(const ModelParams& params, const std::vector<int>& particles,
                          const DeltaSearch& search, int threads = 1);

struct SaturationFit {
    double offset = 0;                   // A
    std::array<double, 3> amplitude{};   // B_i
    std::array<double, 3> time_scale{};  // tau_i, ascending
    double saturation = 0;               // A + sum B_i
    double residual_norm = 0;
    std::vector<double> residuals;
    bool converged = false;
    int status = 0;  // Levenberg-Marquardt status of the chosen start
    int starts_converged = 0;
    std::string diagnostics;
};

/// Least squares fit of A + sum_i B_i (1 - exp(-x / tau_i)), tau_i = exp(theta_i),
/// over 8 starting points. Needs >= 8 samples. A failed fit is returned with
/// converged = false, diagnostics filled and a warning.
SaturationFit saturation_fit(const std::vector<double>& x, const std::vector<double>& y);
SaturationFit saturation_fit(const ScanResult& scan);

struct PowerLawFit {
    double a = 0;
    double beta = 0;
    std::vector<int> used;      // N values in the fit
    std::vector<int> excluded;  // C >= 1 (to within kPurityFloor)
    std::vector<double> residuals;  // of log(1 - C)
    double residual_norm = 0;
    double beta_error = 0;  // standard error, 0 with two points
};

/// 1 - C below this counts as a pure state.
inline constexpr double kPurityFloor = 1e-9;

/// 1 - C = a N^-beta by linear least squares in log-log. Fewer than two usable
/// points is a DomainError.
PowerLawFit powerlaw_fit(const std::vector<int>& particles, const std::vector<double>& fractions);

/// index, eigenvalue
void write_spectrum_csv(const SpectrumReport& report, const std::filesystem::path& path);
/// axis, c0/N, variance, delta, s, c_1..c_3
void write_scan_csv(const ScanResult& scan, const std::filesystem::path& path);
std::string to_json(const SaturationFit& fit);
std::string to_json(const PowerLawFit& fit);

} // namespace soliton

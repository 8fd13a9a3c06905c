#pragma once

// Single-particle density matrix of the Gaussian string superposition,
//
//   rho(x', x) = N G^2 sum_{n, n'} w(n') w(n) F_{p', p}(x', x),
//
// on the grid x_k = k dx, |k| <= floor(L / dx). Only x <= x' (col <= row) is
// computed; the other triangle is the conjugate.

#include "soliton/form_factor.hpp"
#include "soliton/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace soliton {

struct DensityMatrix {
    std::vector<double> grid;
    Eigen::MatrixXcd values;  // row = x' index, col = x index
    ModelParams params;
    double trace_estimate = 0;  // dx * tr rho, should be close to N

    int size() const { return static_cast<int>(grid.size()); }
    double spacing() const { return params.grid_spacing; }
};

enum class AssemblyStrategy {
    Pairwise,         // every (n, n') form factor separately: O(s^2) per element
    DifferenceCached  // one form factor per d = n - n', contracted with the weights: O(s)
};

struct AssemblyOptions {
    AssemblyStrategy strategy = AssemblyStrategy::DifferenceCached;
    int threads = 1;
    int tile_rows = 8;  // rows of the lower triangle per work item
};

/// Warns when |dx tr rho - N| / N exceeds 2%.
DensityMatrix assemble(const ModelParams& params, const AssemblyOptions& options = {});

/// Tabulated reduced form factors G_d(x', x) = exp(-i(p x - p' x')) F_{p',p}(x', x)
/// for |d| <= max_difference. Every slot term of G_d carries the same total
/// rate i (N-1) P_d in x + x', so
///   G_d(x', x) = e^{i (N-1) P_d x'} [S0_d + x S1_d + x' S2_d](x' - x)
/// and only the three profiles over grid offsets are stored. G_d does not
/// depend on delta, on the window centre or on s, so one kernel serves whole
/// scans.
class SolitonKernel {
public:
    /// Throws IntegrityError if a slot term breaks the common total rate.
    SolitonKernel(const ModelParams& params, int max_difference, int threads = 1);

    /// Same N, L, c, dx, lattice, and a window that fits the tabulated differences.
    bool compatible(const ModelParams& params) const;
    DensityMatrix contract(const ModelParams& params, int threads = 1) const;

    int max_difference() const { return max_difference_; }
    const std::vector<double>& grid() const { return grid_; }
    /// Requires col <= row and |d| <= max_difference.
    cplx reduced(int d, int row, int col) const;

    /// Approximate memory footprint of a kernel, for guard rails.
    static double bytes_needed(const ModelParams& params, int max_difference);

private:
    ModelParams shape_;
    int max_difference_;
    std::vector<double> grid_;
    std::vector<double> total_rate_;  // (N-1) P_d, by d + max_difference
    std::vector<cplx> profiles_;      // [((d + max_difference) * M + offset) * 3 + {0, 1, 2}]
};

/// Real diagonal rho(x, x).
std::vector<double> density_profile(const DensityMatrix& dm);

inline constexpr std::uint32_t kMatrixFormatVersion = 1;

/// Little-endian binary container: magic, version, parameter header, grid,
/// row-major interleaved (re, im) values, FNV-1a checksum.
void save(const DensityMatrix& dm, const std::filesystem::path& path);
DensityMatrix load(const std::filesystem::path& path);

/// x, rho(x, x)
void write_profile_csv(const DensityMatrix& dm, const std::filesystem::path& path);
/// x, x', Re rho, Im rho, |rho|
void write_carpet_csv(const DensityMatrix& dm, const std::filesystem::path& path);

} // namespace soliton

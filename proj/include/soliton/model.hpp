#pragma once

// Attractive Lieb-Liniger string states and the Gaussian soliton superposition.
//
// Units: hbar = 2m = 1, so the coupling c carries inverse length. Box is [-L, L]
// with periodic boundary conditions; string momenta p_n sit on a lattice
// fixed by MomentumLattice.

#include <complex>
#include <span>
#include <vector>

namespace soliton {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Which momentum the box quantizes in units of pi / L.
enum class MomentumLattice {
    Total,  // the total string momentum N p = pi n / L, so p = pi n / (N L)
    String  // the string parameter p = pi n / L itself
};

struct ModelParams {
    int particles = 6;         // N
    double half_length = 25.0; // L
    double coupling = -0.5;    // c < 0
    double delta = 0.05;       // Gaussian momentum width
    int strings = 0;           // s; window is |n - n0| <= s/2
    int center_index = 0;      // n0
    double grid_spacing = 0.3; // dx
    MomentumLattice lattice = MomentumLattice::Total;

    /// Throws ConfigError on any violated invariant. Emits a warning when
    /// |c| L < 10 (the box is only marginally larger than the bound state).
    void validate() const;

    int grid_half_count() const;  // floor(L / dx)
    int grid_size() const { return 2 * grid_half_count() + 1; }
    std::vector<double> grid() const;

    /// Spacing of the string parameter p between neighbouring indices n.
    double momentum_quantum() const
    {
        return lattice == MomentumLattice::Total ? kPi / (particles * half_length) : kPi / half_length;
    }
    double momentum(int n) const { return n * momentum_quantum(); }
    int window_lo() const { return center_index - strings / 2; }
    int window_hi() const { return center_index + strings / 2; }
    int window_width() const { return window_hi() - window_lo(); }  // largest |n - n'|

    /// True when x is (within round-off) a grid point inside [-L, L].
    bool on_grid(double x) const;

    bool operator==(const ModelParams&) const = default;
};

struct StringState {
    int index = 0;        // n
    double momentum = 0;  // p_n
    double coupling = 0;  // c, kept so the wavefunction is self-contained
    std::vector<cplx> quasi_momenta;
    double energy = 0;
    double norm_factor = 0;

    int particles() const { return static_cast<int>(quasi_momenta.size()); }
};

/// Normalization of a single string, sqrt(|c|^(N-1) (N-1)! / (2 N L)).
double string_norm(int particles, double half_length, double coupling);

StringState make_string_state(int n, const ModelParams& params);

/// Bound-state wavefunction, valid for unordered coordinates.
cplx string_wavefunction(std::span<const double> coords, const StringState& state);

/// Unnormalized amplitude of string n in the soliton superposition.
double gaussian_weight(int n, const ModelParams& params);

/// G such that G^2 * sum_n weight(n)^2 = 1.
double superposition_normalization(const ModelParams& params);

} // namespace soliton

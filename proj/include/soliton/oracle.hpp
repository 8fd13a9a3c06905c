#pragma once

// Brute-force quadrature of the defining integrals. Nothing in here uses the
// slot decomposition or the diagram engine: form factors are integrated from
// the symmetric string wavefunction over unordered coordinates.

#include "soliton/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace soliton {

struct QuadratureSpec {
    enum class Method { AdaptiveNested, FixedTensor, MonteCarlo };
    enum class Domain {
        Extended,  // the real line, truncated where the integrand is below double precision
        Box        // [-L, L], the literal finite-box integral
    };

    Method method = Method::AdaptiveNested;
    Domain domain = Domain::Extended;
    double abs_tol = 1e-14;
    double rel_tol = 1e-10;
    std::int64_t max_evals = 200'000'000;
    std::uint64_t seed = 12345;  // Monte Carlo only

    void validate() const;
};

struct QuadratureResult {
    cplx value;
    double error = 0;  // estimated absolute error
    std::int64_t evaluations = 0;
    bool trusted = true;
};

/// N <= 4.
QuadratureResult quadrature_form_factor(int np, int n, double xp, double x, const ModelParams& params,
                                        const QuadratureSpec& spec = {});

/// Iterated integral over x <= y_{m+1} <= ... <= y_{m'} <= x'; requires m' - m <= 4.
QuadratureResult quadrature_inner_integral(int m, int mp, double P, int N, double c, double x,
                                           double xp, const QuadratureSpec& spec = {});

/// 1/norm^2 with the last coordinate summed over the grid (dx * 2L/dx); N <= 4.
QuadratureResult quadrature_norm(int N, double half_length, double coupling, double grid_spacing,
                                 const QuadratureSpec& spec = {});

inline constexpr int kOracleMaxParticles = 4;
inline constexpr int kOracleMaxColumns = 4;

struct ValidationRow {
    std::string name;
    cplx analytic;
    cplx oracle;
    double difference = 0;  // |analytic - oracle| / max(|oracle|, tiny)
    double tolerance = 0;
    bool pass = false;
};

struct ValidationOptions {
    std::vector<int> particle_counts{2, 3};
    int draws = 20;
    double half_length = 25.0;
    double coupling = -0.5;
    double grid_spacing = 0.3;
    int max_index = 4;  // string indices drawn from [-max_index, max_index]
    std::uint64_t seed = 20170101;
    double tolerance = 1e-6;
    QuadratureSpec quadrature{};
};

/// Analytic-vs-oracle comparison over seeded random draws: form factors,
/// norms, and same-momentum middle integrals.
std::vector<ValidationRow> run_validation(const ValidationOptions& options);

std::string format_validation_report(const std::vector<ValidationRow>& rows);

} // namespace soliton

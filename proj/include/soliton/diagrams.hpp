#pragma once

// Diagrammatic evaluation of the middle integral
//
//   I_{m',m}(x', x) = int_{x <= y_{m+1} <= ... <= y_{m'} <= x'}
//                     exp( sum_j (iP - u_{j,j}) y_j ) dy_{m+1} ... dy_{m'}
//
// Integrating the variables left to right, every integral produces an "up"
// term (upper limit, the exponent is carried into the next variable) and a
// "low" term (lower limit x, the carried exponent is frozen onto x). A run of
// consecutive up choices that reaches the last column lands on x'. All paths
// with the same final run length l share one exponential,
//
//   exp[ iP (l x' + (m'-m-l) x) - u_{m'-l+1,m'} x' - u_{m+1,m'-l} x ],
//
// so the whole integral collapses to m'-m+1 position-independent prefactors.
//
// For P = 0 a run exponent -u_{s,j} vanishes when s + j == N. That column
// integrates to (y_{j+1} - x) and the path then carries one linear factor,
// which shows up as coefficients of x and x' in the final terms. At most one
// such column exists on any path.

#include "soliton/model.hpp"

#include <map>
#include <span>
#include <tuple>
#include <vector>

namespace soliton {

/// u_{i,j} = c sum_{k=i}^{j} (N - 2k) = c (N-i-j)(j-i+1) for i <= j, else 0.
double partial_sum_u(int i, int j, int N, double c);

struct DiagramTermDistinct {
    int l = 0;
    cplx prefactor;
};

struct DiagramTermSame {
    int l = 0;
    cplx coeff_const;
    cplx coeff_linear_x;
    cplx coeff_linear_xp;
    double exp_x = 0;
    double exp_xp = 0;
};

/// Exponent coefficients of x and x' shared by all l-diagrams of class l.
cplx l_class_rate_x(int l, int m, int mp, double P, int N, double c);
cplx l_class_rate_xp(int l, int m, int mp, double P, int N, double c);

/// One entry per l in [0, m'-m]; requires P != 0.
std::vector<DiagramTermDistinct> build_prefactors_distinct(int m, int mp, double P, int N, double c);

/// One entry per l in [0, m'-m] for identical string momenta (P = 0).
std::vector<DiagramTermSame> build_prefactors_same(int m, int mp, int N, double c);

cplx evaluate_middle(std::span<const DiagramTermDistinct> terms, int m, int mp, double P, int N,
                     double c, double x, double xp);
cplx evaluate_middle(std::span<const DiagramTermSame> terms, double x, double xp);

/// Reference path: sums every one of the 2^(m'-m) diagrams individually, in
/// lexicographic (low < up, first column most significant) order. Handles
/// P = 0 as well. Refuses m'-m > 14.
cplx enumerate_naive(int m, int mp, double P, int N, double c, double x, double xp);

inline constexpr int kNaiveMaxColumns = 14;

/// Unified l-class term: (c0 + cx x + cxp x') exp(rate_x x + rate_xp x').
struct MiddleTerm {
    int l = 0;
    cplx c0;
    cplx cx;
    cplx cxp;
    cplx rate_x;
    cplx rate_xp;
};

/// Position-independent prefactors for every slot pair (m, m') and every
/// momentum-difference index d = n - n' in a range, for fixed (N, c, lattice).
class PrefactorTable {
public:
    /// P = d * momentum_quantum for each tabulated difference d.
    PrefactorTable(int particles, double coupling, double momentum_quantum, int d_min, int d_max);

    int particles() const { return particles_; }
    double coupling() const { return coupling_; }
    double momentum_quantum() const { return momentum_quantum_; }
    int d_min() const { return d_min_; }
    int d_max() const { return d_max_; }
    bool contains(int d) const { return d >= d_min_ && d <= d_max_; }
    double momentum_difference(int d) const { return d * momentum_quantum_; }

    std::span<const MiddleTerm> entry(int m, int mp, int d) const;

private:
    int particles_;
    double coupling_;
    double momentum_quantum_;
    int d_min_;
    int d_max_;
    std::map<std::tuple<int, int, int>, std::vector<MiddleTerm>> entries_;
};

} // namespace soliton

#pragma once

// Form factor between two string states,
//
//   F_{p',p}(x', x) = int dy_1..dy_{N-1} conj(psi_{p'}(y, x')) psi_p(y, x),
//
// evaluated for x <= x' by sorting the y's into the three regions below x,
// between x and x', and above x'. Each slot pair (m, m') is a product of two
// closed-form outer integrals and the diagrammatic middle integral. All
// exponents are kept as coefficients and exponentiated once per term: the
// partial exponents overflow at large N, the combined one never exceeds 0.

#include "soliton/diagrams.hpp"
#include "soliton/model.hpp"

#include <span>
#include <vector>

namespace soliton {

/// coeff * exp(rate * x)
struct ExpTerm {
    cplx coeff;
    cplx rate;

    cplx value(double x) const { return coeff * std::exp(rate * x); }
};

/// Integral over the m variables below x.
ExpTerm closed_form_I1(int m, double P, int N, double c);
/// Integral over the N-1-m' variables above x'.
ExpTerm closed_form_I2(int mp, double P, int N, double c);

inline cplx closed_form_I1(int m, double P, int N, double c, double x)
{
    return closed_form_I1(m, P, N, c).value(x);
}
inline cplx closed_form_I2(int mp, double P, int N, double c, double xp)
{
    return closed_form_I2(mp, P, N, c).value(xp);
}

/// One l-class of one slot pair, with every position-independent factor folded
/// in: (N-1)! norm^2, the envelope, I1, I2 and the diagram prefactor. The
/// string phases exp(i(p x - p' x')) are left out so the term depends on the
/// momenta only through d = n - n'.
struct SlotTerm {
    int m = 0;
    int mp = 0;
    int l = 0;
    cplx coeff_const;
    cplx coeff_x;
    cplx coeff_xp;
    cplx rate_x;
    cplx rate_xp;
};

class FormFactorTable {
public:
    /// Covers momentum differences d = n - n' in [d_min, d_max].
    FormFactorTable(const ModelParams& params, int d_min, int d_max);
    /// Covers every difference that occurs inside the string window of params.
    explicit FormFactorTable(const ModelParams& params);

    const PrefactorTable& prefactors() const { return prefactors_; }
    bool contains(int d) const { return prefactors_.contains(d); }
    std::span<const SlotTerm> terms(int d) const;

    /// exp(-i(p x - p' x')) F_{p',p}(x', x) for x <= x'; no grid checks.
    cplx reduced(int d, double xp, double x) const;

private:
    PrefactorTable prefactors_;
    std::vector<std::vector<SlotTerm>> terms_;  // indexed by d - d_min
};

/// F_{p',p}(x', x) with p = pi n / L, p' = pi n' / L. Both coordinates must be
/// grid points. For x > x' the value is conj(F_{p,p'}(x, x')).
cplx form_factor(int np, int n, double xp, double x, const ModelParams& params,
                 const FormFactorTable& table);

} // namespace soliton

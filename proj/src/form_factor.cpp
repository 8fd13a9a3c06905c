#include "soliton/form_factor.hpp"

#include "soliton/errors.hpp"

#include <cmath>
#include <sstream>

namespace soliton {

namespace {

const ModelParams& validated(const ModelParams& params)
{
    params.validate();
    return params;
}

} // namespace

ExpTerm closed_form_I1(int m, double P, int N, double c)
{
    if (m < 0 || m > N - 1)
        throw DomainError("closed_form_I1: need 0 <= m <= N-1");
    // Cumulative exponent after r variables: i r P - c r (N - r); each
    // integration from -infinity divides by it.
    cplx denom = 1.0;
    for (int r = 1; r <= m; ++r)
        denom *= cplx(-c * r * (N - r), r * P);
    return {1.0 / denom, cplx(-c * m * (N - m), m * P)};
}

ExpTerm closed_form_I2(int mp, double P, int N, double c)
{
    if (mp < 0 || mp > N - 1)
        throw DomainError("closed_form_I2: need 0 <= m' <= N-1");
    // Integrating from the top down, r variables carry i r P + c r (N - r),
    // and each integration to +infinity contributes -1/(that exponent).
    const int K = N - 1 - mp;
    cplx denom = 1.0;
    for (int r = 1; r <= K; ++r)
        denom *= -cplx(c * r * (N - r), r * P);
    return {1.0 / denom, cplx(c * K * (N - K), K * P)};
}

FormFactorTable::FormFactorTable(const ModelParams& params)
    : FormFactorTable(params, -params.window_width(), params.window_width())
{
}

FormFactorTable::FormFactorTable(const ModelParams& params, int d_min, int d_max)
    : prefactors_(validated(params).particles, params.coupling, params.momentum_quantum(), d_min, d_max)
{
    const int N = params.particles;
    const double c = params.coupling;
    const double overall
        = std::tgamma(double(N)) * std::pow(string_norm(N, params.half_length, c), 2);

    terms_.resize(d_max - d_min + 1);
    for (int d = d_min; d <= d_max; ++d) {
        const double P = prefactors_.momentum_difference(d);
        auto& out = terms_[d - d_min];
        for (int m = 0; m <= N - 1; ++m) {
            const ExpTerm i1 = closed_form_I1(m, P, N, c);
            for (int mp = m; mp <= N - 1; ++mp) {
                const ExpTerm i2 = closed_form_I2(mp, P, N, c);
                // y's below x contribute c/2 (x - y) each, y's above x' c/2 (y - x'),
                // y's in between c/2 (x' - x): the real envelope below.
                const double env_x = 0.5 * c * (2 * m - N + 1);
                const double env_xp = 0.5 * c * (2 * mp - N + 1);
                const cplx outer = overall * i1.coeff * i2.coeff;
                for (const MiddleTerm& t : prefactors_.entry(m, mp, d)) {
                    out.push_back({m, mp, t.l, outer * t.c0, outer * t.cx, outer * t.cxp,
                                   env_x + i1.rate + t.rate_x, env_xp + i2.rate + t.rate_xp});
                }
            }
        }
    }
}

std::span<const SlotTerm> FormFactorTable::terms(int d) const
{
    if (!contains(d)) {
        std::ostringstream msg;
        msg << "FormFactorTable: momentum difference " << d << " outside [" << prefactors_.d_min()
            << ", " << prefactors_.d_max() << "]";
        throw DomainError(msg.str());
    }
    return terms_[d - prefactors_.d_min()];
}

cplx FormFactorTable::reduced(int d, double xp, double x) const
{
    cplx sum = 0;
    for (const SlotTerm& t : terms_[d - prefactors_.d_min()]) {
        const cplx poly = t.coeff_const + t.coeff_x * x + t.coeff_xp * xp;
        sum += poly * std::exp(t.rate_x * x + t.rate_xp * xp);
    }
    return sum;
}

cplx form_factor(int np, int n, double xp, double x, const ModelParams& params,
                 const FormFactorTable& table)
{
    const auto& pt = table.prefactors();
    if (pt.particles() != params.particles || pt.coupling() != params.coupling
        || pt.momentum_quantum() != params.momentum_quantum())
        throw DomainError("form_factor: table was built for different (N, c, momentum lattice)");
    if (!params.on_grid(x) || !params.on_grid(xp)) {
        std::ostringstream msg;
        msg << "form_factor: coordinates (" << xp << ", " << x << ") are not grid points";
        throw DomainError(msg.str());
    }
    if (x > xp)
        return std::conj(form_factor(n, np, x, xp, params, table));
    const int d = n - np;
    if (!table.contains(d))
        (void)table.terms(d);  // throws with the range in the message
    const double p = params.momentum(n);
    const double pp = params.momentum(np);
    return std::exp(cplx(0.0, p * x - pp * xp)) * table.reduced(d, xp, x);
}

} // namespace soliton

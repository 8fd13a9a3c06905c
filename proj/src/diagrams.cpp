#include "soliton/diagrams.hpp"

#include "soliton/errors.hpp"

#include <boost/multiprecision/cpp_complex.hpp>

#include <cmath>
#include <sstream>

namespace soliton {

double partial_sum_u(int i, int j, int N, double c)
{
    if (i > j)
        return 0.0;
    return c * double(N - i - j) * double(j - i + 1);
}

cplx l_class_rate_x(int l, int m, int mp, double P, int N, double c)
{
    return {-partial_sum_u(m + 1, mp - l, N, c), double(mp - m - l) * P};
}

cplx l_class_rate_xp(int l, int, int mp, double P, int N, double c)
{
    return {-partial_sum_u(mp - l + 1, mp, N, c), double(l) * P};
}

namespace {

void check_slots(int m, int mp, int N, const char* who)
{
    if (m < 0 || m > mp || mp > N - 1) {
        std::ostringstream msg;
        msg << who << ": need 0 <= m <= m' <= N-1, got m=" << m << " m'=" << mp << " N=" << N;
        throw DomainError(msg.str());
    }
}

// Linear polynomial a0 + ax*x + ay*y carried by a diagram state, where y is
// the next integration variable (or x' after the last column).
template <class C>
struct Linear {
    C a0, ax, ay;
};

// The sweep adds contributions of very different size when a run exponent is
// small, so it works in extended precision and rounds only the result.
using Wide = std::complex<long double>;

cplx narrow(Wide z)
{
    return {double(z.real()), double(z.imag())};
}

bool vanishes(int s, int j, double P, int N)
{
    return P == 0.0 && s + j == N;
}

// Column sweep over the memory state. A state is labelled by the first column
// s of the current up-run (s == j+1: the previous choice was low). In the
// terms of the transition-factor recursion this is the run length k = j-s+1;
// a nonzero ay is the integration-by-parts regime (alpha = 1). From that
// regime an up step feeds both (k+1, alpha=1) through ay/E and (k+1, alpha=0)
// through -ay/E^2, and a low step returns to (0, 0) with an x-linear factor.
// Merging paths that share a state is exact because a low choice erases all
// earlier history except a constant factor.
std::vector<Linear<Wide>> sweep(int m, int mp, double P, int N, double c)
{
    const int D = mp - m;
    // state[k] for run start s = m+1+k, k in [0, D].
    std::vector<Linear<Wide>> state(D + 1, Linear<Wide>{});
    state[0] = {1.0L, 0.0L, 0.0L};

    for (int j = m + 1; j <= mp; ++j) {
        std::vector<Linear<Wide>> next(D + 1, Linear<Wide>{});
        const int fresh = j + 1 - (m + 1);  // slot of run start s = j+1
        for (int s = m + 1; s <= j; ++s) {
            const Linear<Wide>& cur = state[s - (m + 1)];
            if (cur.a0 == 0.0L && cur.ax == 0.0L && cur.ay == 0.0L)
                continue;
            Linear<Wide>& up = next[s - (m + 1)];
            Linear<Wide>& low = next[fresh];
            if (vanishes(s, j, P, N)) {
                if (cur.ax != 0.0L || cur.ay != 0.0L)
                    throw InternalError("diagram engine: second vanishing exponent on one path");
                up.ay += cur.a0;
                low.ax -= cur.a0;
                continue;
            }
            const Wide E(-(long double)c * (N - s - j) * (j - s + 1), (long double)(j - s + 1) * P);
            if (std::abs(E) == 0.0L)
                throw InternalError("diagram engine: degenerate transition denominator");
            const Wide inv = 1.0L / E;
            const Wide inv2 = inv * inv;
            up.a0 += cur.a0 * inv - cur.ay * inv2;
            up.ax += cur.ax * inv;
            up.ay += cur.ay * inv;
            low.a0 += -cur.a0 * inv + cur.ay * inv2;
            low.ax += -(cur.ax + cur.ay) * inv;
        }
        state = std::move(next);
    }
    return state;
}

} // namespace

std::vector<DiagramTermDistinct> build_prefactors_distinct(int m, int mp, double P, int N, double c)
{
    check_slots(m, mp, N, "build_prefactors_distinct");
    if (P == 0.0)
        throw DomainError("build_prefactors_distinct: requires P != 0 (use build_prefactors_same)");
    const auto state = sweep(m, mp, P, N, c);
    const int D = mp - m;
    std::vector<DiagramTermDistinct> out(D + 1);
    for (int k = 0; k <= D; ++k) {
        // run start s = m+1+k ends on x' with l = m' - s + 1 = D - k (k == D: l = 0)
        const int l = D - k;
        out[l] = {l, narrow(state[k].a0)};
    }
    return out;
}

std::vector<DiagramTermSame> build_prefactors_same(int m, int mp, int N, double c)
{
    check_slots(m, mp, N, "build_prefactors_same");
    const auto state = sweep(m, mp, 0.0, N, c);
    const int D = mp - m;
    std::vector<DiagramTermSame> out(D + 1);
    for (int k = 0; k <= D; ++k) {
        const int l = D - k;
        out[l] = {l,
                  narrow(state[k].a0),
                  narrow(state[k].ax),
                  narrow(state[k].ay),
                  l_class_rate_x(l, m, mp, 0.0, N, c).real(),
                  l_class_rate_xp(l, m, mp, 0.0, N, c).real()};
    }
    return out;
}

cplx evaluate_middle(std::span<const DiagramTermDistinct> terms, int m, int mp, double P, int N,
                     double c, double x, double xp)
{
    cplx sum = 0;
    for (const auto& t : terms) {
        const cplx e = l_class_rate_x(t.l, m, mp, P, N, c) * x + l_class_rate_xp(t.l, m, mp, P, N, c) * xp;
        sum += t.prefactor * std::exp(e);
    }
    return sum;
}

cplx evaluate_middle(std::span<const DiagramTermSame> terms, double x, double xp)
{
    cplx sum = 0;
    for (const auto& t : terms) {
        const cplx poly = t.coeff_const + t.coeff_linear_x * x + t.coeff_linear_xp * xp;
        sum += poly * std::exp(t.exp_x * x + t.exp_xp * xp);
    }
    return sum;
}

cplx enumerate_naive(int m, int mp, double P, int N, double c, double x, double xp)
{
    check_slots(m, mp, N, "enumerate_naive");
    const int D = mp - m;
    if (D > kNaiveMaxColumns) {
        std::ostringstream msg;
        msg << "enumerate_naive: refusing 2^" << D << " diagrams (limit 2^" << kNaiveMaxColumns << ")";
        throw DomainError(msg.str());
    }

    // Reference path: every diagram is kept separately, so it runs in quad
    // precision to stay a trustworthy yardstick when terms cancel.
    using Q = boost::multiprecision::cpp_complex_quad;
    struct Frame {
        int column;   // next column to integrate
        int start;    // first column of the current up-run
        Linear<Q> poly;
        Q frozen;     // exponent already frozen onto x by low choices
        bool bifurcated;
    };
    auto rate = [&](int s, int j) {
        return Q(-boost::multiprecision::cpp_bin_float_quad(c) * (N - s - j) * (j - s + 1),
                 boost::multiprecision::cpp_bin_float_quad(P) * (j - s + 1));
    };
    const Q qx(x), qxp(xp);

    Q total = 0;
    std::vector<Frame> stack;
    stack.push_back({m + 1, m + 1, {Q(1), Q(0), Q(0)}, Q(0), false});
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (f.column > mp) {
            // Leaf: the carried variable is x'.
            const Q rate_xp = f.start <= mp ? rate(f.start, mp) : Q(0);
            const Q poly = f.poly.a0 + f.poly.ax * qx + f.poly.ay * qxp;
            total += poly * exp(f.frozen * qx + rate_xp * qxp);
            continue;
        }
        const int j = f.column;
        Frame up = f;
        Frame low = f;
        up.column = low.column = j + 1;
        low.start = j + 1;
        if (vanishes(f.start, j, P, N)) {
            if (f.bifurcated)
                throw InternalError("enumerate_naive: second vanishing exponent on one path");
            up.bifurcated = low.bifurcated = true;
            up.poly = {Q(0), Q(0), f.poly.a0};
            low.poly = {Q(0), -f.poly.a0, Q(0)};
        } else {
            const Q E = rate(f.start, j);
            const Q inv = Q(1) / E;
            const Q inv2 = inv * inv;
            up.poly = {f.poly.a0 * inv - f.poly.ay * inv2, f.poly.ax * inv, f.poly.ay * inv};
            low.poly = {-f.poly.a0 * inv + f.poly.ay * inv2, -(f.poly.ax + f.poly.ay) * inv, Q(0)};
            low.frozen = f.frozen + E;
        }
        // Pop order: low (0) before up (1).
        stack.push_back(up);
        stack.push_back(low);
    }
    return {double(total.real()), double(total.imag())};
}

PrefactorTable::PrefactorTable(int particles, double coupling, double momentum_quantum, int d_min,
                               int d_max)
    : particles_(particles), coupling_(coupling), momentum_quantum_(momentum_quantum), d_min_(d_min),
      d_max_(d_max)
{
    if (particles < 1 || d_min > d_max)
        throw DomainError("PrefactorTable: invalid particle count or difference range");
    const int N = particles;
    for (int d = d_min; d <= d_max; ++d) {
        const double P = momentum_difference(d);
        for (int m = 0; m <= N - 1; ++m) {
            for (int mp = m; mp <= N - 1; ++mp) {
                std::vector<MiddleTerm> terms;
                if (d == 0) {
                    for (const auto& t : build_prefactors_same(m, mp, N, coupling))
                        terms.push_back({t.l, t.coeff_const, t.coeff_linear_x, t.coeff_linear_xp,
                                         cplx(t.exp_x, 0.0), cplx(t.exp_xp, 0.0)});
                } else {
                    for (const auto& t : build_prefactors_distinct(m, mp, P, N, coupling))
                        terms.push_back({t.l, t.prefactor, 0.0, 0.0,
                                         l_class_rate_x(t.l, m, mp, P, N, coupling),
                                         l_class_rate_xp(t.l, m, mp, P, N, coupling)});
                }
                entries_.emplace(std::make_tuple(m, mp, d), std::move(terms));
            }
        }
    }
}

std::span<const MiddleTerm> PrefactorTable::entry(int m, int mp, int d) const
{
    auto it = entries_.find({m, mp, d});
    if (it == entries_.end()) {
        std::ostringstream msg;
        msg << "PrefactorTable: no entry for (m=" << m << ", m'=" << mp << ", d=" << d << ")";
        throw DomainError(msg.str());
    }
    return it->second;
}

} // namespace soliton

#include "soliton/oracle.hpp"

#include "soliton/diagrams.hpp"
#include "soliton/errors.hpp"
#include "soliton/form_factor.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace soliton {

void QuadratureSpec::validate() const
{
    if (!(abs_tol > 0) || !(rel_tol > 0))
        throw ConfigError("QuadratureSpec: tolerances must be > 0");
    if (max_evals <= 0)
        throw ConfigError("QuadratureSpec: max_evals must be > 0");
}

namespace {

struct BudgetExceeded {};

struct Interval {
    double lo, hi;
};

// Value of an inner integral, its estimated absolute error, and the integral
// of |f| over the same region.
struct Estimate {
    cplx value;
    double error = 0;
    double l1 = 0;
};

// One 31-point Kronrod panel with its embedded 15-point Gauss rule. Errors
// reported by the integrand (from deeper levels) are carried through the
// Kronrod weights.
template <class F>
Estimate kronrod_panel(F&& g, double a, double b)
{
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    const auto& xk = gauss_kronrod<double, 31>::abscissa();
    const auto& wk = gauss_kronrod<double, 31>::weights();
    const auto& wg = gauss<double, 15>::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);

    cplx kron = 0, gsum = 0;
    double l1 = 0, carried = 0;
    const Estimate e0 = g(mid);
    kron = e0.value * wk[0];
    gsum = e0.value * wg[0];
    l1 = e0.l1 * wk[0];
    carried = e0.error * wk[0];
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const Estimate p = g(mid + half * xk[i]);
        const Estimate m = g(mid - half * xk[i]);
        kron += (p.value + m.value) * wk[i];
        l1 += (p.l1 + m.l1) * wk[i];
        carried += (p.error + m.error) * wk[i];
        if (i % 2 == 0)
            gsum += (p.value + m.value) * wg[i / 2];
    }
    Estimate r;
    r.value = kron * half;
    r.l1 = l1 * half;
    r.error = std::abs(kron - gsum) * half + carried * half
        + 2.0 * std::numeric_limits<double>::epsilon() * r.l1;
    return r;
}

// Iterated integration over variables y[0..dims-1], outermost last. Bounds and
// kink locations of variable k may depend on y[k+1..].
class NestedIntegrator {
public:
    using Integrand = std::function<cplx(std::span<const double>)>;
    using Bounds = std::function<Interval(int, std::span<const double>)>;
    using Kinks = std::function<void(int, std::span<const double>, std::vector<double>&)>;

    NestedIntegrator(const QuadratureSpec& spec, int dims, Integrand f, Bounds bounds, Kinks kinks)
        : spec_(spec), dims_(dims), f_(std::move(f)), bounds_(std::move(bounds)),
          kinks_(std::move(kinks)), y_(dims, 0.0)
    {
    }

    QuadratureResult run()
    {
        QuadratureResult r;
        if (dims_ == 0) {
            r.value = f_(y_);
            r.evaluations = 1;
            return r;
        }
        try {
            if (spec_.method == QuadratureSpec::Method::MonteCarlo)
                return monte_carlo();
            const Estimate e = level(dims_ - 1);
            r.value = e.value;
            r.error = e.error;
            r.evaluations = evals_;
            r.trusted = r.error <= spec_.rel_tol * std::abs(r.value) + spec_.abs_tol
                || r.error <= spec_.rel_tol * e.l1;
        } catch (const BudgetExceeded&) {
            r.value = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
            r.error = std::numeric_limits<double>::infinity();
            r.evaluations = evals_;
            r.trusted = false;
        }
        return r;
    }

private:
    std::vector<double> pieces(int k)
    {
        const std::span<const double> outer(y_.data() + k + 1, dims_ - k - 1);
        const Interval iv = bounds_(k, outer);
        std::vector<double> pts{iv.lo, iv.hi};
        std::vector<double> kinks;
        kinks_(k, outer, kinks);
        for (double b : kinks)
            if (b > iv.lo && b < iv.hi)
                pts.push_back(b);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

    Estimate integrand(int k, double t)
    {
        y_[k] = t;
        if (k == 0) {
            if (++evals_ > spec_.max_evals)
                throw BudgetExceeded{};
            const cplx v = f_(y_);
            return {v, 0.0, std::abs(v)};
        }
        return level(k - 1);
    }

    // Each level leaves a quarter of its relative budget to the level above,
    // so deeper integrals are resolved more tightly.
    double level_tolerance(int k) const { return spec_.rel_tol * std::pow(0.25, dims_ - 1 - k); }

    Estimate level(int k)
    {
        using boost::math::quadrature::gauss;

        const auto pts = pieces(k);
        const double saved = y_[k];
        Estimate total;
        auto g = [&](double t) { return integrand(k, t); };
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double a = pts[i], b = pts[i + 1];
            if (!(b > a))
                continue;
            if (spec_.method == QuadratureSpec::Method::AdaptiveNested) {
                adaptive(g, a, b, level_tolerance(k), total);
            } else {
                // Fixed panels; the outermost level compares two orders for an error estimate.
                const int panels = std::max(1, int(std::ceil((b - a) / panel_width_)));
                const double h = (b - a) / panels;
                auto value = [&](double t) { return g(t).value; };
                for (int q = 0; q < panels; ++q) {
                    const double pa = a + q * h, pb = pa + h;
                    double piece_l1 = 0;
                    const cplx hi = gauss<double, 30>::integrate(value, pa, pb, &piece_l1);
                    total.value += hi;
                    total.l1 += piece_l1;
                    if (k == dims_ - 1)
                        total.error += std::abs(hi - gauss<double, 20>::integrate(value, pa, pb));
                }
            }
        }
        y_[k] = saved;
        return total;
    }

    template <class G>
    void adaptive(G& g, double a, double b, double rel, Estimate& total)
    {
        constexpr int kMaxDepth = 30;
        struct Pending {
            double a, b;
            int depth;
        };
        std::vector<Pending> stack{{a, b, 0}};
        while (!stack.empty()) {
            const Pending p = stack.back();
            stack.pop_back();
            const Estimate e = kronrod_panel(g, p.a, p.b);
            const bool converged = e.error <= rel * e.l1;
            if (converged || p.depth >= kMaxDepth) {
                total.value += e.value;
                total.error += e.error;
                total.l1 += e.l1;
                continue;
            }
            const double mid = 0.5 * (p.a + p.b);
            stack.push_back({mid, p.b, p.depth + 1});
            stack.push_back({p.a, mid, p.depth + 1});
        }
    }

    QuadratureResult monte_carlo()
    {
        // Stratified sampling on the bounding box of the outermost variable's range.
        const Interval iv = bounds_(dims_ - 1, {});
        const double span = iv.hi - iv.lo;
        const std::int64_t budget = std::min<std::int64_t>(spec_.max_evals, 400'000);
        int strata = std::max(1, int(std::floor(std::pow(double(budget) / 2.0, 1.0 / dims_))));
        std::int64_t cells = 1;
        for (int d = 0; d < dims_; ++d)
            cells *= strata;
        const double cell_volume = std::pow(span / strata, dims_);

        std::mt19937_64 rng(spec_.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<int> idx(dims_, 0);
        cplx total = 0;
        double variance = 0;
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            std::int64_t rem = cell;
            for (int d = 0; d < dims_; ++d) {
                idx[d] = int(rem % strata);
                rem /= strata;
            }
            cplx s[2];
            for (auto& v : s) {
                for (int d = 0; d < dims_; ++d)
                    y_[d] = iv.lo + (idx[d] + unit(rng)) * span / strata;
                v = f_(y_);
                ++evals_;
            }
            total += 0.5 * (s[0] + s[1]) * cell_volume;
            variance += std::norm(0.5 * (s[0] - s[1]) * cell_volume);
        }
        QuadratureResult r;
        r.value = total;
        r.error = std::sqrt(variance);
        r.evaluations = evals_;
        r.trusted = r.error <= spec_.rel_tol * std::abs(r.value) + spec_.abs_tol;
        return r;
    }

    const QuadratureSpec& spec_;
    int dims_;
    Integrand f_;
    Bounds bounds_;
    Kinks kinks_;
    std::vector<double> y_;
    std::int64_t evals_ = 0;

public:
    double panel_width_ = 1.0;
};

// Integration range for an unordered coordinate that is bound to the points
// `anchors` with decay rate at least |c| per unit length.
Interval unordered_range(const QuadratureSpec& spec, double half_length, double coupling, double lo_anchor,
                         double hi_anchor)
{
    if (spec.domain == QuadratureSpec::Domain::Box)
        return {-half_length, half_length};
    const double reach = 40.0 / std::abs(coupling);
    return {lo_anchor - reach, hi_anchor + reach};
}

} // namespace

QuadratureResult quadrature_form_factor(int np, int n, double xp, double x, const ModelParams& params,
                                        const QuadratureSpec& spec)
{
    params.validate();
    spec.validate();
    const int N = params.particles;
    if (N > kOracleMaxParticles) {
        std::ostringstream msg;
        msg << "quadrature_form_factor: N = " << N << " exceeds the oracle limit " << kOracleMaxParticles;
        throw DomainError(msg.str());
    }
    const StringState bra = make_string_state(np, params);
    const StringState ket = make_string_state(n, params);
    const int dims = N - 1;

    std::vector<double> cb(N), ck(N);
    auto f = [&](std::span<const double> y) {
        std::copy(y.begin(), y.end(), cb.begin());
        std::copy(y.begin(), y.end(), ck.begin());
        cb[N - 1] = xp;
        ck[N - 1] = x;
        return std::conj(string_wavefunction(cb, bra)) * string_wavefunction(ck, ket);
    };
    const Interval range
        = unordered_range(spec, params.half_length, params.coupling, std::min(x, xp), std::max(x, xp));
    auto bounds = [&](int, std::span<const double>) { return range; };
    auto kinks = [&](int, std::span<const double> outer, std::vector<double>& out) {
        out.push_back(x);
        out.push_back(xp);
        out.insert(out.end(), outer.begin(), outer.end());
    };
    NestedIntegrator integ(spec, dims, f, bounds, kinks);
    integ.panel_width_ = 0.5 / std::abs(params.coupling);
    return integ.run();
}

QuadratureResult quadrature_inner_integral(int m, int mp, double P, int N, double c, double x, double xp,
                                           const QuadratureSpec& spec)
{
    spec.validate();
    if (m < 0 || m > mp || mp > N - 1)
        throw DomainError("quadrature_inner_integral: need 0 <= m <= m' <= N-1");
    if (mp - m > kOracleMaxColumns)
        throw DomainError("quadrature_inner_integral: m' - m exceeds the oracle limit");
    if (x > xp)
        throw DomainError("quadrature_inner_integral: need x <= x'");
    const int dims = mp - m;
    // y[k] is the variable x_{m+1+k}; the outermost is x_{m'}.
    auto f = [&](std::span<const double> y) {
        cplx e = 0;
        for (int k = 0; k < dims; ++k) {
            const int j = m + 1 + k;
            e += cplx(-c * (N - 2 * j), P) * y[k];
        }
        return std::exp(e);
    };
    auto bounds = [&](int k, std::span<const double> outer) {
        return Interval{x, k == dims - 1 ? xp : outer[0]};
    };
    auto kinks = [](int, std::span<const double>, std::vector<double>&) {};
    NestedIntegrator integ(spec, dims, f, bounds, kinks);
    integ.panel_width_ = 1.0 / std::max(1.0, std::abs(c) * N);
    return integ.run();
}

QuadratureResult quadrature_norm(int N, double half_length, double coupling, double grid_spacing,
                                 const QuadratureSpec& spec)
{
    spec.validate();
    if (N < 1 || N > kOracleMaxParticles)
        throw DomainError("quadrature_norm: particle count outside [1, 4]");
    if (!(coupling < 0) || !(half_length > 0) || !(grid_spacing > 0))
        throw ConfigError("quadrature_norm: need c < 0, L > 0, dx > 0");
    const int dims = N - 1;
    // |psi|^2 / norm^2 with the last particle pinned at the origin; translation
    // invariance turns the grid sum into (2L/dx) copies.
    auto f = [&](std::span<const double> y) {
        double pair = 0;
        for (int j = 0; j < dims; ++j) {
            pair += std::abs(y[j]);
            for (int i = 0; i < j; ++i)
                pair += std::abs(y[j] - y[i]);
        }
        return cplx(std::exp(coupling * pair), 0.0);
    };
    QuadratureSpec extended = spec;
    extended.domain = QuadratureSpec::Domain::Extended;
    const Interval range = unordered_range(extended, half_length, coupling, 0.0, 0.0);
    auto bounds = [&](int, std::span<const double>) { return range; };
    auto kinks = [](int, std::span<const double> outer, std::vector<double>& out) {
        out.push_back(0.0);
        out.insert(out.end(), outer.begin(), outer.end());
    };
    NestedIntegrator integ(extended, dims, f, bounds, kinks);
    integ.panel_width_ = 0.5 / std::abs(coupling);
    QuadratureResult r = integ.run();
    const double copies = grid_spacing * (2.0 * half_length / grid_spacing);
    r.value *= copies;
    r.error *= copies;
    return r;
}

std::vector<ValidationRow> run_validation(const ValidationOptions& opt)
{
    std::vector<ValidationRow> rows;
    std::mt19937_64 rng(opt.seed);
    auto relative = [](cplx a, cplx b) {
        return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min());
    };

    for (int N : opt.particle_counts) {
        ModelParams params;
        params.particles = N;
        params.half_length = opt.half_length;
        params.coupling = opt.coupling;
        params.grid_spacing = opt.grid_spacing;
        params.strings = 2 * opt.max_index;
        params.center_index = 0;

        const FormFactorTable table(params, -2 * opt.max_index, 2 * opt.max_index);
        const int half = params.grid_half_count();
        // Keep points away from the box edge where the extended-domain reading
        // and the literal box differ; the oracle integrates the same extension.
        std::uniform_int_distribution<int> pick_point(-half / 2, half / 2);
        std::uniform_int_distribution<int> pick_index(-opt.max_index, opt.max_index);

        for (int draw = 0; draw < opt.draws; ++draw) {
            const int n = pick_index(rng);
            const int np = pick_index(rng);
            int a = pick_point(rng), b = pick_point(rng);
            if (a > b)
                std::swap(a, b);
            const double x = a * params.grid_spacing;
            const double xp = b * params.grid_spacing;
            const cplx analytic = form_factor(np, n, xp, x, params, table);
            const QuadratureResult q = quadrature_form_factor(np, n, xp, x, params, opt.quadrature);
            std::ostringstream name;
            name << "form_factor N=" << N << " n'=" << np << " n=" << n << " x'=" << xp << " x=" << x;
            const double diff = relative(analytic, q.value);
            rows.push_back({name.str(), analytic, q.value, diff, opt.tolerance,
                            q.trusted && diff <= opt.tolerance});
        }

        const double exact = 1.0 / std::pow(string_norm(N, opt.half_length, opt.coupling), 2);
        const QuadratureResult qn
            = quadrature_norm(N, opt.half_length, opt.coupling, opt.grid_spacing, opt.quadrature);
        const double diff = relative(exact, qn.value);
        rows.push_back({"inverse_norm_squared N=" + std::to_string(N), exact, qn.value, diff,
                        opt.tolerance, qn.trusted && diff <= opt.tolerance});
    }

    // Same-momentum middle integrals through a vanishing exponent.
    for (int N : opt.particle_counts) {
        for (int m = 0; m <= N - 1; ++m) {
            for (int mp = m; mp <= std::min(N - 1, m + kOracleMaxColumns); ++mp) {
                const double x = -0.9, xp = 1.5;
                const auto terms = build_prefactors_same(m, mp, N, opt.coupling);
                const cplx analytic = evaluate_middle(terms, x, xp);
                const QuadratureResult q
                    = quadrature_inner_integral(m, mp, 0.0, N, opt.coupling, x, xp, opt.quadrature);
                std::ostringstream name;
                name << "middle_same N=" << N << " m=" << m << " m'=" << mp;
                const double diff = relative(analytic, q.value);
                rows.push_back({name.str(), analytic, q.value, diff, 1e-9, q.trusted && diff <= 1e-9});
            }
        }
    }
    return rows;
}

std::string format_validation_report(const std::vector<ValidationRow>& rows)
{
    std::ostringstream out;
    out << std::left << std::setw(58) << "case" << std::right << std::setw(26) << "analytic"
        << std::setw(26) << "oracle" << std::setw(12) << "|delta|" << std::setw(10) << "tol"
        << std::setw(6) << "ok" << "\n";
    out << std::scientific << std::setprecision(4);
    for (const auto& r : rows) {
        std::ostringstream a, o;
        a << std::scientific << std::setprecision(6) << r.analytic.real() << std::showpos
          << r.analytic.imag() << "i";
        o << std::scientific << std::setprecision(6) << r.oracle.real() << std::showpos
          << r.oracle.imag() << "i";
        out << std::left << std::setw(58) << r.name << std::right << std::setw(26) << a.str()
            << std::setw(26) << o.str() << std::setw(12) << r.difference << std::setw(10)
            << r.tolerance << std::setw(6) << (r.pass ? "pass" : "FAIL") << "\n";
    }
    return out.str();
}

} // namespace soliton

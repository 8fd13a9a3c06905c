#include "soliton/spectral.hpp"

#include "csv.hpp"
#include "parallel.hpp"
#include "soliton/errors.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/NonLinearOptimization>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace soliton {

SpectrumReport eigendecompose(const DensityMatrix& dm, bool with_orbitals)
{
    const Eigen::MatrixXcd& rho = dm.values;
    if (rho.rows() != rho.cols() || rho.rows() != dm.size())
        throw IntegrityError("eigendecompose: matrix shape does not match the grid");
    const double scale = rho.size() ? rho.cwiseAbs().maxCoeff() : 0.0;
    const double skew = rho.size() ? (rho - rho.adjoint()).cwiseAbs().maxCoeff() : 0.0;
    if (skew > 1e-10 * scale) {
        std::ostringstream msg;
        msg << "eigendecompose: matrix is not Hermitian (max |rho - rho^H| = " << skew
            << ", max |rho| = " << scale << ")";
        throw IntegrityError(msg.str());
    }

    const double dx = dm.spacing();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
        dx * rho, with_orbitals ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw IntegrityError("eigendecompose: eigensolver did not converge");

    // Solver output is ascending.
    const Eigen::Index M = rho.rows();
    std::vector<Eigen::Index> order(M);
    std::iota(order.begin(), order.end(), 0);
    const auto& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return ev[i] > ev[j]; });

    SpectrumReport out;
    out.params = dm.params;
    out.eigenvalues.resize(M);
    for (Eigen::Index i = 0; i < M; ++i)
        out.eigenvalues[i] = ev[order[i]];
    if (with_orbitals) {
        out.orbitals.resize(M, M);
        for (Eigen::Index i = 0; i < M; ++i)
            out.orbitals.col(i) = solver.eigenvectors().col(order[i]) / std::sqrt(dx);
    }
    out.condensate_fraction = M ? out.eigenvalues[0] / dm.params.particles : 0.0;
    out.variance = spatial_variance(dm);
    return out;
}

double spatial_variance(const std::vector<double>& grid, const std::vector<double>& density, double spacing,
                        int particles)
{
    if (grid.size() != density.size())
        throw DomainError("spatial_variance: grid and density differ in length");
    if (particles < 1)
        throw DomainError("spatial_variance: need N >= 1");
    double m1 = 0, m2 = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        m1 += grid[k] * density[k];
        m2 += grid[k] * grid[k] * density[k];
    }
    const double w = spacing / particles;
    return w * m2 - (w * m1) * (w * m1);
}

double spatial_variance(const DensityMatrix& dm)
{
    return spatial_variance(dm.grid, density_profile(dm), dm.spacing(), dm.params.particles);
}

double hf_variance(int particles, double coupling)
{
    if (particles < 2)
        throw DomainError("hf_variance: the mean-field soliton width is undefined for N < 2");
    if (!(coupling != 0))
        throw DomainError("hf_variance: coupling must be nonzero");
    const double n1 = particles - 1;
    return kPi * kPi / (3 * coupling * coupling * n1 * n1);
}

namespace {

ScanPoint measure(const DensityMatrix& dm, double axis)
{
    const SpectrumReport r = eigendecompose(dm, false);
    ScanPoint pt;
    pt.axis = axis;
    pt.condensate_fraction = r.condensate_fraction;
    pt.variance = r.variance;
    for (int i = 0; i < 4 && i < r.eigenvalues.size(); ++i)
        pt.leading[i] = r.eigenvalues[i];
    pt.delta = dm.params.delta;
    pt.strings = dm.params.strings;
    pt.particles = dm.params.particles;
    return pt;
}

void pick_best(ScanResult& scan)
{
    scan.best = -1;
    for (int i = 0; i < int(scan.points.size()); ++i)
        if (scan.best < 0 || scan.points[i].condensate_fraction > scan.points[scan.best].condensate_fraction)
            scan.best = i;
}

template <class T>
void require_increasing(const std::vector<T>& axis, const char* what)
{
    if (axis.empty())
        throw DomainError(std::string(what) + ": empty axis");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1]))
            throw DomainError(std::string(what) + ": axis values must be strictly increasing");
}

// Collects warnings instead of printing them while a search probes many
// parameter points.
class QuietWarnings {
public:
    QuietWarnings()
        : previous_(set_warning_sink([this](const std::string&) { ++count_; }))
    {
    }
    ~QuietWarnings() { set_warning_sink(previous_); }
    int count() const { return count_; }

private:
    std::atomic<int> count_{0};
    WarningSink previous_;
};

} // namespace

ScanResult scan_delta(const ModelParams& params, const std::vector<double>& deltas, int threads)
{
    require_increasing(deltas, "scan_delta");
    ModelParams shape = params;
    shape.delta = deltas.front();
    shape.validate();
    const SolitonKernel kernel(shape, shape.window_width(), threads);
    ScanResult scan;
    scan.axis_name = "delta";
    scan.points.resize(deltas.size());
    detail::parallel_for(int(deltas.size()), threads, [&](int i) {
        ModelParams p = params;
        p.delta = deltas[i];
        scan.points[i] = measure(kernel.contract(p), deltas[i]);
    });
    pick_best(scan);

    const int n = int(scan.points.size());
    if (n >= 2) {
        const double last = scan.points[n - 1].condensate_fraction;
        const double prev = scan.points[n - 2].condensate_fraction;
        if (last - prev > 1e-3 * std::abs(prev)) {
            scan.undersampled = true;
            std::ostringstream msg;
            msg << "scan_delta: c0/N still rises by " << 100 * (last - prev) / std::abs(prev)
                << "% at delta = " << deltas.back() << " (s = " << params.strings
                << "); the maximum lies beyond the scan or the momentum distribution is under-sampled";
            warn(msg.str());
        }
    }
    return scan;
}

ScanResult scan_strings(const ModelParams& params, const std::vector<int>& strings, int threads)
{
    require_increasing(strings, "scan_strings");
    if (strings.front() < 0)
        throw ConfigError("scan_strings: s must be >= 0");
    ModelParams widest = params;
    widest.strings = strings.back();
    widest.validate();
    const SolitonKernel kernel(widest, widest.window_width(), threads);
    ScanResult scan;
    scan.axis_name = "strings";
    scan.points.resize(strings.size());
    detail::parallel_for(int(strings.size()), threads, [&](int i) {
        ModelParams p = params;
        p.strings = strings[i];
        scan.points[i] = measure(kernel.contract(p), strings[i]);
    });
    pick_best(scan);
    return scan;
}

int search_strings(const ModelParams& params, const DeltaSearch& search, double delta)
{
    if (search.window_sigmas <= 0)
        return search.max_strings;
    // w(n) = exp(-(n - n0)^2 / (2 sigma^2)) with sigma = L sqrt(delta / 2) / pi.
    const double sigma = params.half_length * std::sqrt(delta / 2) / kPi;
    const double half = std::ceil(search.window_sigmas * sigma);
    return int(std::min<double>(search.max_strings, 2 * half));
}

ScanPoint optimize_delta(const ModelParams& params, const DeltaSearch& search, int threads)
{
    if (!(search.delta_min > 0) || !(search.delta_max > search.delta_min))
        throw ConfigError("optimize_delta: need 0 < delta_min < delta_max");
    if (search.coarse_points < 3)
        throw ConfigError("optimize_delta: need at least 3 coarse points");
    if (search.max_strings < 0)
        throw ConfigError("optimize_delta: max_strings must be >= 0");

    ModelParams shape = params;
    shape.strings = search.max_strings;
    shape.delta = search.delta_min;
    shape.validate();
    const SolitonKernel kernel(shape, shape.window_width(), threads);

    const bool maximize = search.objective == DeltaSearch::Objective::MaxCondensate;
    const double invalid = -std::numeric_limits<double>::infinity();
    auto evaluate = [&](double log_delta, int contract_threads) {
        ModelParams p = params;
        p.delta = std::exp(log_delta);
        p.strings = search_strings(params, search, p.delta);
        const DensityMatrix dm = kernel.contract(p, contract_threads);
        const double N = p.particles;
        ScanPoint pt = measure(dm, p.delta);
        const bool ok = std::abs(dm.trace_estimate - N) <= search.trace_tolerance * N;
        const double score = maximize ? pt.leading[0] / dm.trace_estimate : -pt.variance;
        return std::pair{pt, ok ? score : invalid};
    };

    QuietWarnings quiet;
    const double lo = std::log(search.delta_min), hi = std::log(search.delta_max);
    const int K = search.coarse_points;
    const double step = (hi - lo) / (K - 1);
    std::vector<std::pair<ScanPoint, double>> coarse(K);
    detail::parallel_for(K, threads, [&](int i) { coarse[i] = evaluate(lo + i * step, 1); });

    int best = 0;
    for (int i = 1; i < K; ++i)
        if (coarse[i].second > coarse[best].second)
            best = i;
    if (coarse[best].second == invalid) {
        std::ostringstream msg;
        msg << "optimize_delta: no delta in [" << search.delta_min << ", " << search.delta_max
            << "] gives dx tr rho within " << 100 * search.trace_tolerance << "% of N = " << params.particles;
        throw IntegrityError(msg.str());
    }

    const double g = (std::sqrt(5.0) - 1) / 2;
    double a = lo + std::max(0, best - 1) * step, b = lo + std::min(K - 1, best + 1) * step;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    auto f1 = evaluate(x1, threads), f2 = evaluate(x2, threads);
    for (int it = 0; it < search.refine_steps; ++it) {
        if (f1.second >= f2.second) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = evaluate(x1, threads);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = evaluate(x2, threads);
        }
    }
    auto result = coarse[best];
    for (const auto& cand : {f1, f2})
        if (cand.second > result.second)
            result = cand;

    const int skipped = int(std::count_if(coarse.begin(), coarse.end(),
                                          [&](const auto& c) { return c.second == invalid; }));
    const int quiet_count = quiet.count();
    if (skipped > 0) {
        std::ostringstream msg;
        msg << "optimize_delta: N = " << params.particles << ": " << skipped << " of " << K
            << " coarse deltas skipped because dx tr rho missed N by more than "
            << 100 * search.trace_tolerance << "% (" << quiet_count << " warnings suppressed)";
        warn(msg.str());
    }
    if (best == 0 || best == K - 1) {
        std::ostringstream msg;
        msg << "optimize_delta: N = " << params.particles << ": optimum at the edge of the delta range ("
            << result.first.delta << ")";
        warn(msg.str());
    }
    return result.first;
}

ScanResult scan_particles(const ModelParams& params, const std::vector<int>& particles,
                          const DeltaSearch& search, int threads)
{
    require_increasing(particles, "scan_particles");
    ScanResult scan;
    scan.axis_name = "particles";
    for (int N : particles) {
        ModelParams p = params;
        p.particles = N;
        ScanPoint pt = optimize_delta(p, search, threads);
        pt.axis = N;
        scan.points.push_back(pt);
    }
    pick_best(scan);
    return scan;
}

namespace {

// A + sum_i B_i (1 - exp(-x / tau_i)), parameters (A, B_1..3, theta_1..3).
struct SaturationModel {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const std::vector<double>& x;
    const std::vector<double>& y;

    int inputs() const { return 7; }
    int values() const { return int(x.size()); }

    int operator()(const Eigen::VectorXd& q, Eigen::VectorXd& r) const
    {
        for (int k = 0; k < values(); ++k) {
            double v = q[0];
            for (int i = 0; i < 3; ++i)
                v += q[1 + i] * -std::expm1(-x[k] * std::exp(-q[4 + i]));
            r[k] = v - y[k];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& q, Eigen::MatrixXd& J) const
    {
        for (int k = 0; k < values(); ++k) {
            J(k, 0) = 1;
            for (int i = 0; i < 3; ++i) {
                const double u = x[k] * std::exp(-q[4 + i]);
                const double e = std::exp(-u);
                J(k, 1 + i) = -std::expm1(-u);
                J(k, 4 + i) = -q[1 + i] * e * u;
            }
        }
        return 0;
    }
};

bool lm_converged(int status)
{
    using namespace Eigen::LevenbergMarquardtSpace;
    switch (status) {
    case RelativeReductionTooSmall:
    case RelativeErrorTooSmall:
    case RelativeErrorAndReductionTooSmall:
    case CosinusTooSmall:
    case FtolTooSmall:
    case XtolTooSmall:
    case GtolTooSmall:
        return true;
    default:
        return false;
    }
}

} // namespace

SaturationFit saturation_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size())
        throw DomainError("saturation_fit: x and y differ in length");
    if (x.size() < 8)
        throw DomainError("saturation_fit: need at least 8 samples for a 7-parameter model");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw DomainError("saturation_fit: non-finite sample");

    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
    const double xmax = *xmax_it;
    double xlo = std::numeric_limits<double>::infinity();
    for (double v : x)
        if (v > 0)
            xlo = std::min(xlo, v);
    if (!(xmax > 0))
        throw DomainError("saturation_fit: need positive abscissae");
    if (!std::isfinite(xlo) || xlo == xmax)
        xlo = 1e-3 * xmax;
    const double y0 = y[xmin_it - x.begin()];
    const double rise = y[xmax_it - x.begin()] - y0;

    // Time scales as fractions of the log range, and how the rise is split.
    static const double kPlacement[8][3] = {{0.1, 0.5, 0.9}, {0.2, 0.5, 0.8},  {0.0, 0.4, 1.0},
                                            {0.3, 0.6, 1.2}, {-0.2, 0.3, 0.7}, {0.1, 0.3, 0.5},
                                            {0.5, 0.7, 0.9}, {0.0, 0.5, 1.5}};
    static const double kSplit[8][3] = {{1, 1, 1}, {2, 1, 1}, {1, 1, 2}, {1, 2, 1},
                                        {3, 1, 1}, {1, 1, 3}, {1, 3, 1}, {1, 1, 1}};

    SaturationModel model{x, y};
    const double span = std::log(xmax / xlo);
    SaturationFit best;
    double best_norm = std::numeric_limits<double>::infinity();
    std::ostringstream diag;
    int converged = 0;
    for (int s = 0; s < 8; ++s) {
        Eigen::VectorXd q(7);
        const double total = kSplit[s][0] + kSplit[s][1] + kSplit[s][2];
        q[0] = y0;
        for (int i = 0; i < 3; ++i) {
            q[1 + i] = rise * kSplit[s][i] / total;
            q[4 + i] = std::log(xlo) + kPlacement[s][i] * span;
        }
        Eigen::LevenbergMarquardt<SaturationModel> lm(model);
        lm.parameters.maxfev = 4000;
        lm.parameters.xtol = 1e-14;
        lm.parameters.ftol = 1e-14;
        const int status = lm.minimize(q);
        Eigen::VectorXd r(model.values());
        model(q, r);
        const double norm = r.norm();
        const bool ok = lm_converged(status) && q.allFinite() && std::isfinite(norm);
        converged += ok;
        diag << "start " << s << ": status " << status << ", residual " << norm << ", evaluations "
             << lm.nfev << "; ";
        // A converged start beats any unconverged one.
        const bool better = (ok && !best.converged) || (ok == best.converged && norm < best_norm);
        if (better && q.allFinite()) {
            best_norm = norm;
            best.converged = ok;
            best.status = status;
            best.offset = q[0];
            std::array<std::pair<double, double>, 3> comp;
            for (int i = 0; i < 3; ++i)
                comp[i] = {std::exp(q[4 + i]), q[1 + i]};
            std::sort(comp.begin(), comp.end());
            for (int i = 0; i < 3; ++i) {
                best.time_scale[i] = comp[i].first;
                best.amplitude[i] = comp[i].second;
            }
            best.residuals.assign(r.data(), r.data() + r.size());
            best.residual_norm = norm;
        }
    }
    best.starts_converged = converged;
    best.saturation = best.offset + best.amplitude[0] + best.amplitude[1] + best.amplitude[2];
    best.diagnostics = diag.str();
    if (!best.converged)
        warn("saturation_fit: no start converged; best residual " + std::to_string(best.residual_norm) + " ("
             + best.diagnostics + ")");
    return best;
}

SaturationFit saturation_fit(const ScanResult& scan)
{
    std::vector<double> x, y;
    for (const auto& pt : scan.points) {
        x.push_back(pt.axis);
        y.push_back(pt.condensate_fraction);
    }
    return saturation_fit(x, y);
}

PowerLawFit powerlaw_fit(const std::vector<int>& particles, const std::vector<double>& fractions)
{
    if (particles.size() != fractions.size())
        throw DomainError("powerlaw_fit: N values and fractions differ in length");
    PowerLawFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < particles.size(); ++i) {
        if (particles[i] < 1)
            throw DomainError("powerlaw_fit: N must be >= 1");
        const double gap = 1 - fractions[i];
        if (!(gap > kPurityFloor)) {
            fit.excluded.push_back(particles[i]);
            std::ostringstream msg;
            msg << "powerlaw_fit: excluding N = " << particles[i] << " (C = " << fractions[i]
                << ", 1 - C not above " << kPurityFloor << ")";
            warn(msg.str());
            continue;
        }
        fit.used.push_back(particles[i]);
        lx.push_back(std::log(double(particles[i])));
        ly.push_back(std::log(gap));
    }
    const int n = int(lx.size());
    const double mx = n ? std::accumulate(lx.begin(), lx.end(), 0.0) / n : 0;
    const double my = n ? std::accumulate(ly.begin(), ly.end(), 0.0) / n : 0;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (n < 2 || !(sxx > 0))
        throw DomainError("powerlaw_fit: need at least two distinct N with C < 1");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    fit.beta = -slope;
    fit.a = std::exp(intercept);
    double rss = 0;
    for (int i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        fit.residuals.push_back(r);
        rss += r * r;
    }
    fit.residual_norm = std::sqrt(rss);
    fit.beta_error = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    return fit;
}

void write_spectrum_csv(const SpectrumReport& report, const std::filesystem::path& path)
{
    auto out = detail::open_csv(path);
    out << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i)
        out << i << ',' << detail::fmt(report.eigenvalues[i]) << '\n';
    if (!out)
        throw IoError("write to " + path.string() + " failed");
}

void write_scan_csv(const ScanResult& scan, const std::filesystem::path& path)
{
    auto out = detail::open_csv(path);
    out << scan.axis_name << ",c0_over_N,variance,delta,strings,c1,c2,c3\n";
    for (const auto& pt : scan.points)
        out << detail::fmt(pt.axis) << ',' << detail::fmt(pt.condensate_fraction) << ','
            << detail::fmt(pt.variance) << ',' << detail::fmt(pt.delta) << ',' << pt.strings << ','
            << detail::fmt(pt.leading[1]) << ',' << detail::fmt(pt.leading[2]) << ','
            << detail::fmt(pt.leading[3]) << '\n';
    if (!out)
        throw IoError("write to " + path.string() + " failed");
}

std::string to_json(const SaturationFit& fit)
{
    nlohmann::ordered_json j;
    j["model"] = "A + sum_i B_i (1 - exp(-x / tau_i))";
    j["A"] = fit.offset;
    j["B"] = fit.amplitude;
    j["tau"] = fit.time_scale;
    j["saturation"] = fit.saturation;
    j["residual_norm"] = fit.residual_norm;
    j["residuals"] = fit.residuals;
    j["converged"] = fit.converged;
    j["status"] = fit.status;
    j["starts_converged"] = fit.starts_converged;
    j["diagnostics"] = fit.diagnostics;
    return j.dump(2);
}

std::string to_json(const PowerLawFit& fit)
{
    nlohmann::ordered_json j;
    j["model"] = "1 - C = a N^-beta";
    j["a"] = fit.a;
    j["beta"] = fit.beta;
    j["beta_error"] = fit.beta_error;
    j["used"] = fit.used;
    j["excluded"] = fit.excluded;
    j["residuals"] = fit.residuals;
    j["residual_norm"] = fit.residual_norm;
    return j.dump(2);
}

} // namespace soliton

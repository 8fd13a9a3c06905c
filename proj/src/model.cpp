#include "soliton/model.hpp"

#include "soliton/errors.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>

namespace soliton {

namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

} // namespace

WarningSink set_warning_sink(WarningSink sink)
{
    std::lock_guard lock(g_sink_mutex);
    std::swap(sink, g_sink);
    return sink;
}

void warn(const std::string& message)
{
    std::lock_guard lock(g_sink_mutex);
    if (g_sink)
        g_sink(message);
    else
        std::cerr << "warning: " << message << "\n";
}

void ModelParams::validate() const
{
    std::ostringstream err;
    if (particles < 1)
        err << "particle count must be >= 1 (got " << particles << "); ";
    if (!(half_length > 0))
        err << "box half length must be > 0 (got " << half_length << "); ";
    if (!(coupling < 0))
        err << "coupling must be negative (attractive regime), got " << coupling << "; ";
    if (!(delta > 0))
        err << "momentum width delta must be > 0 (got " << delta << "); ";
    if (strings < 0)
        err << "string window s must be >= 0 (got " << strings << "); ";
    if (!(grid_spacing > 0) || !(grid_spacing <= half_length))
        err << "grid spacing must lie in (0, L] (got " << grid_spacing << "); ";
    if (!err.str().empty())
        throw ConfigError("invalid model parameters: " + err.str());

    const double ratio = std::abs(coupling) * half_length;
    if (ratio < 3.0) {
        std::ostringstream msg;
        msg << "|c| L = " << ratio
            << " < 3: the bound state is not small compared to the box (need 1/|c| << L)";
        throw ConfigError(msg.str());
    }
    if (ratio < 10.0) {
        std::ostringstream msg;
        msg << "|c| L = " << ratio << " < 10: box truncation errors may be significant";
        warn(msg.str());
    }
}

int ModelParams::grid_half_count() const
{
    // Tolerate L/dx landing a hair below an integer.
    return static_cast<int>(std::floor(half_length / grid_spacing + 1e-9));
}

std::vector<double> ModelParams::grid() const
{
    const int k = grid_half_count();
    std::vector<double> g;
    g.reserve(2 * k + 1);
    for (int i = -k; i <= k; ++i)
        g.push_back(i * grid_spacing);
    return g;
}

bool ModelParams::on_grid(double x) const
{
    const double t = x / grid_spacing;
    const double r = std::round(t);
    return std::abs(t - r) <= 1e-9 * std::max(1.0, std::abs(t))
        && std::abs(r) <= grid_half_count();
}

double string_norm(int particles, double half_length, double coupling)
{
    // |c|^(N-1) (N-1)! / (2 N L); |c| because c < 0 and N^2 must be positive.
    const double log_num = (particles - 1) * std::log(std::abs(coupling)) + std::lgamma(particles);
    const double log_den = std::log(2.0 * particles * half_length);
    return std::exp(0.5 * (log_num - log_den));
}

StringState make_string_state(int n, const ModelParams& params)
{
    params.validate();
    const int N = params.particles;
    const double c = params.coupling;

    StringState st;
    st.index = n;
    st.momentum = params.momentum(n);
    st.coupling = c;
    st.quasi_momenta.reserve(N);
    for (int j = 1; j <= N; ++j)
        st.quasi_momenta.emplace_back(st.momentum, 0.5 * c * (N - 2 * j + 1));
    st.energy = N * st.momentum * st.momentum - c * c / 12.0 * N * (double(N) * N - 1);
    st.norm_factor = string_norm(N, params.half_length, c);
    return st;
}

cplx string_wavefunction(std::span<const double> coords, const StringState& state)
{
    const auto N = coords.size();
    if (N != state.quasi_momenta.size())
        throw DomainError("string_wavefunction: coordinate count does not match particle count");

    double sum = 0;
    double pair = 0;
    for (std::size_t j = 0; j < N; ++j) {
        sum += coords[j];
        for (std::size_t i = 0; i < j; ++i)
            pair += std::abs(coords[j] - coords[i]);
    }
    return state.norm_factor * std::exp(cplx(0.5 * state.coupling * pair, state.momentum * sum));
}

double gaussian_weight(int n, const ModelParams& params)
{
    if (n < params.window_lo() || n > params.window_hi()) {
        std::ostringstream msg;
        msg << "gaussian_weight: index " << n << " outside window [" << params.window_lo() << ", "
            << params.window_hi() << "]";
        throw DomainError(msg.str());
    }
    const double k = n - params.center_index;
    const double L = params.half_length;
    return std::exp(-kPi * kPi * k * k / (L * L * params.delta));
}

double superposition_normalization(const ModelParams& params)
{
    double sum = 0;
    for (int n = params.window_lo(); n <= params.window_hi(); ++n) {
        const double w = gaussian_weight(n, params);
        sum += w * w;
    }
    return 1.0 / std::sqrt(sum);
}

} // namespace soliton

#include "soliton/density_matrix.hpp"

#include "csv.hpp"
#include "parallel.hpp"
#include "soliton/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace soliton {

namespace {

// Everything in rho that depends on the Gaussian weights. With p = k n and
// n = n' + d,
//   rho(x_a, x_b) = N G^2 sum_d G_d(x_a, x_b) e^{i k d x_b} R_d(x_b - x_a),
//   R_d(delta)    = sum_{n'} w(n' + d) w(n') e^{i k n' delta}.
struct Contraction {
    int span = 0;  // |d| <= span
    int size = 0;
    double scale = 0;
    std::vector<cplx> phase;    // [(d + span) * size + b]
    std::vector<cplx> overlap;  // [(d + span) * size + (a - b)]

    Contraction(const ModelParams& params, const std::vector<double>& grid)
        : span(params.window_width()), size(int(grid.size()))
    {
        const double G = superposition_normalization(params);
        scale = params.particles * G * G;
        const double k = params.momentum_quantum();
        const int lo = params.window_lo(), hi = params.window_hi();
        std::vector<double> w(hi - lo + 1);
        for (int n = lo; n <= hi; ++n)
            w[n - lo] = gaussian_weight(n, params);

        const int count = hi - lo + 1;
        std::vector<cplx> wave(std::size_t(size) * count);  // e^{i k n' delta_q}
        for (int q = 0; q < size; ++q)
            for (int np = lo; np <= hi; ++np)
                wave[std::size_t(q) * count + (np - lo)] = std::exp(cplx(0.0, -k * np * q * params.grid_spacing));

        phase.resize(std::size_t(2 * span + 1) * size);
        overlap.resize(std::size_t(2 * span + 1) * size);
        for (int d = -span; d <= span; ++d) {
            const std::size_t base = std::size_t(d + span) * size;
            for (int b = 0; b < size; ++b)
                phase[base + b] = std::exp(cplx(0.0, k * d * grid[b]));
            for (int q = 0; q < size; ++q) {
                const cplx* e = wave.data() + std::size_t(q) * count;
                cplx sum = 0;
                for (int np = std::max(lo, lo - d); np <= std::min(hi, hi - d); ++np)
                    sum += w[np + d - lo] * w[np - lo] * e[np - lo];
                overlap[base + q] = sum;
            }
        }
    }
};

void check_grid_size(const ModelParams& params)
{
    params.validate();
    if (params.grid_size() < 1)
        throw ConfigError("grid is empty");
}

// Lower triangle by row tiles, then the conjugate fill and the trace.
template <class Element>
DensityMatrix fill(const ModelParams& params, std::vector<double> grid, int threads, int tile_rows,
                   Element&& element)
{
    DensityMatrix dm;
    dm.params = params;
    dm.grid = std::move(grid);
    const int M = dm.size();
    dm.values.resize(M, M);
    const int tile = std::max(1, tile_rows);
    const int tiles = (M + tile - 1) / tile;
    detail::parallel_for(tiles, threads, [&](int t) {
        for (int a = t * tile; a < std::min(M, (t + 1) * tile); ++a)
            for (int b = 0; b <= a; ++b)
                dm.values(a, b) = element(a, b);
    });
    for (int a = 0; a < M; ++a) {
        dm.values(a, a) = cplx(dm.values(a, a).real(), 0.0);
        for (int b = 0; b < a; ++b)
            dm.values(b, a) = std::conj(dm.values(a, b));
    }
    double trace = 0;
    for (int a = 0; a < M; ++a)
        trace += dm.values(a, a).real();
    dm.trace_estimate = params.grid_spacing * trace;

    const double N = params.particles;
    const double deviation = std::abs(dm.trace_estimate - N) / N;
    if (deviation > 0.02) {
        std::ostringstream msg;
        msg << "dx * tr rho = " << dm.trace_estimate << " deviates from N = " << params.particles << " by "
            << 100 * deviation << "% (|c| L = " << std::abs(params.coupling) * params.half_length
            << "; box truncation or a coarse grid)";
        warn(msg.str());
    }
    return dm;
}

} // namespace

DensityMatrix assemble(const ModelParams& params, const AssemblyOptions& options)
{
    check_grid_size(params);
    if (options.strategy == AssemblyStrategy::DifferenceCached)
        return SolitonKernel(params, params.window_width(), options.threads).contract(params, options.threads);

    const auto grid = params.grid();
    const FormFactorTable table(params);
    const int lo = params.window_lo(), hi = params.window_hi();
    std::vector<double> w(hi - lo + 1);
    for (int n = lo; n <= hi; ++n)
        w[n - lo] = gaussian_weight(n, params);
    const double G = superposition_normalization(params);
    const double scale = params.particles * G * G;
    return fill(params, grid, options.threads, options.tile_rows, [&](int a, int b) {
        const double x = grid[b], xp = grid[a];
        cplx sum = 0;
        for (int n = lo; n <= hi; ++n) {
            for (int np = lo; np <= hi; ++np) {
                const cplx phase = std::exp(cplx(0.0, params.momentum(n) * x - params.momentum(np) * xp));
                sum += w[n - lo] * w[np - lo] * phase * table.reduced(n - np, xp, x);
            }
        }
        return scale * sum;
    });
}

SolitonKernel::SolitonKernel(const ModelParams& params, int max_difference, int threads)
    : shape_(params), max_difference_(max_difference)
{
    check_grid_size(params);
    if (max_difference < 0)
        throw DomainError("SolitonKernel: max_difference must be >= 0");
    grid_ = params.grid();
    const int M = int(grid_.size());
    const int width = 2 * max_difference + 1;
    total_rate_.resize(width);
    profiles_.assign(std::size_t(width) * M * 3, cplx(0));
    const FormFactorTable table(params, -max_difference, max_difference);
    const int N = params.particles;
    detail::parallel_for(width, threads, [&](int i) {
        const int d = i - max_difference;
        const double rate = (N - 1) * table.prefactors().momentum_difference(d);
        total_rate_[i] = rate;
        const auto terms = table.terms(d);
        for (const SlotTerm& t : terms) {
            const cplx drift = t.rate_x + t.rate_xp - cplx(0.0, rate);
            if (std::abs(drift) > 1e-9 * (1 + std::abs(t.rate_x)))
                throw IntegrityError("SolitonKernel: slot term is not translation covariant");
        }
        cplx* out = profiles_.data() + std::size_t(i) * M * 3;
        for (int q = 0; q < M; ++q) {
            const double gap = -q * params.grid_spacing;  // x - x'
            cplx s0 = 0, s1 = 0, s2 = 0;
            for (const SlotTerm& t : terms) {
                const cplx e = std::exp(t.rate_x * gap);
                s0 += t.coeff_const * e;
                s1 += t.coeff_x * e;
                s2 += t.coeff_xp * e;
            }
            out[3 * q] = s0;
            out[3 * q + 1] = s1;
            out[3 * q + 2] = s2;
        }
    });
}

bool SolitonKernel::compatible(const ModelParams& params) const
{
    return params.particles == shape_.particles && params.half_length == shape_.half_length
        && params.coupling == shape_.coupling && params.grid_spacing == shape_.grid_spacing
        && params.lattice == shape_.lattice
        && params.window_width() <= max_difference_;
}

cplx SolitonKernel::reduced(int d, int row, int col) const
{
    const int i = d + max_difference_;
    const std::size_t at = (std::size_t(i) * grid_.size() + (row - col)) * 3;
    const double xp = grid_[row], x = grid_[col];
    const cplx poly = profiles_[at] + x * profiles_[at + 1] + xp * profiles_[at + 2];
    return std::exp(cplx(0.0, total_rate_[i] * xp)) * poly;
}

double SolitonKernel::bytes_needed(const ModelParams& params, int max_difference)
{
    return double(params.grid_size()) * (2.0 * max_difference + 1) * 3 * sizeof(cplx);
}

DensityMatrix SolitonKernel::contract(const ModelParams& params, int threads) const
{
    params.validate();
    if (!compatible(params)) {
        std::ostringstream msg;
        msg << "SolitonKernel: parameters (N=" << params.particles << ", L=" << params.half_length
            << ", c=" << params.coupling << ", dx=" << params.grid_spacing << ", s=" << params.strings
            << ") do not match the kernel (N=" << shape_.particles << ", L=" << shape_.half_length
            << ", c=" << shape_.coupling << ", dx=" << shape_.grid_spacing
            << ", max difference=" << max_difference_ << ")";
        throw DomainError(msg.str());
    }
    const Contraction weights(params, grid_);
    const int M = int(grid_.size());
    const int span = weights.span;
    std::vector<cplx> row_phase(std::size_t(2 * span + 1) * M);
    for (int d = -span; d <= span; ++d)
        for (int a = 0; a < M; ++a)
            row_phase[std::size_t(d + span) * M + a]
                = std::exp(cplx(0.0, total_rate_[d + max_difference_] * grid_[a]));
    return fill(params, grid_, threads, 8, [&](int a, int b) {
        const double xp = grid_[a], x = grid_[b];
        cplx sum = 0;
        for (int d = -span; d <= span; ++d) {
            const std::size_t base = std::size_t(d + span) * M;
            const cplx* g = profiles_.data() + (std::size_t(d + max_difference_) * M + (a - b)) * 3;
            const cplx poly = g[0] + x * g[1] + xp * g[2];
            sum += poly * row_phase[base + a] * weights.phase[base + b] * weights.overlap[base + (a - b)];
        }
        return weights.scale * sum;
    });
}

std::vector<double> density_profile(const DensityMatrix& dm)
{
    std::vector<double> out(dm.size());
    for (int k = 0; k < dm.size(); ++k)
        out[k] = dm.values(k, k).real();
    return out;
}

namespace {

constexpr char kMagic[8] = {'S', 'O', 'L', 'I', 'T', 'O', 'N', 'M'};

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

class Writer {
public:
    void u32(std::uint32_t v) { le(v, 4); }
    void i32(std::int32_t v) { le(std::uint32_t(v), 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v)
    {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        le(bits, 8);
    }
    std::string bytes;

private:
    void le(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i)
            bytes.push_back(char((v >> (8 * i)) & 0xff));
    }
};

class Reader {
public:
    Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

    std::uint32_t u32() { return std::uint32_t(le(4)); }
    std::int32_t i32() { return std::int32_t(std::uint32_t(le(4))); }
    std::uint64_t u64() { return le(8); }
    double f64()
    {
        const std::uint64_t bits = le(8);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void skip(std::size_t n)
    {
        if (remaining() < n)
            throw SchemaError("density matrix file is truncated");
        pos_ += n;
    }
    std::size_t remaining() const { return end_ - pos_; }

private:
    std::uint64_t le(int n)
    {
        if (remaining() < std::size_t(n))
            throw SchemaError("density matrix file is truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += n;
        return v;
    }
    const std::string& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

} // namespace

void save(const DensityMatrix& dm, const std::filesystem::path& path)
{
    Writer w;
    w.bytes.append(kMagic, sizeof kMagic);
    w.u32(kMatrixFormatVersion);
    const ModelParams& p = dm.params;
    w.i32(p.particles);
    w.f64(p.half_length);
    w.f64(p.coupling);
    w.f64(p.delta);
    w.i32(p.strings);
    w.i32(p.center_index);
    w.f64(p.grid_spacing);
    w.i32(p.lattice == MomentumLattice::Total ? 0 : 1);
    w.f64(dm.trace_estimate);
    const int M = dm.size();
    if (dm.values.rows() != M || dm.values.cols() != M)
        throw IntegrityError("save: matrix shape does not match the grid");
    w.u64(std::uint64_t(M));
    for (double x : dm.grid)
        w.f64(x);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) {
            w.f64(dm.values(a, b).real());
            w.f64(dm.values(a, b).imag());
        }
    w.u64(fnv1a(w.bytes));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out.write(w.bytes.data(), std::streamsize(w.bytes.size()));
    if (!out)
        throw IoError("write to " + path.string() + " failed");
}

DensityMatrix load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw SchemaError(path.string() + " is not a density matrix file (bad magic)");

    Reader header(bytes, bytes.size());
    header.skip(sizeof kMagic);
    const std::uint32_t version = header.u32();
    if (version != kMatrixFormatVersion) {
        std::ostringstream msg;
        msg << "density matrix format version mismatch: expected " << kMatrixFormatVersion << ", found "
            << version;
        throw SchemaError(msg.str());
    }
    if (bytes.size() < sizeof kMagic + 4 + 8)
        throw SchemaError("density matrix file is truncated");
    const std::size_t body_end = bytes.size() - 8;
    Reader r(bytes, body_end);
    r.skip(sizeof kMagic + 4);

    DensityMatrix dm;
    ModelParams& p = dm.params;
    p.particles = r.i32();
    p.half_length = r.f64();
    p.coupling = r.f64();
    p.delta = r.f64();
    p.strings = r.i32();
    p.center_index = r.i32();
    p.grid_spacing = r.f64();
    const std::int32_t lattice = r.i32();
    if (lattice != 0 && lattice != 1)
        throw SchemaError("density matrix file has an unknown momentum lattice tag");
    p.lattice = lattice == 0 ? MomentumLattice::Total : MomentumLattice::String;
    dm.trace_estimate = r.f64();
    const std::uint64_t M = r.u64();
    if (M > 100000 || r.remaining() != M * 8 + M * M * 16)
        throw SchemaError("density matrix file is truncated or has an inconsistent size");
    dm.grid.resize(M);
    for (auto& x : dm.grid)
        x = r.f64();
    dm.values.resize(Eigen::Index(M), Eigen::Index(M));
    for (std::uint64_t a = 0; a < M; ++a)
        for (std::uint64_t b = 0; b < M; ++b) {
            const double re = r.f64();
            const double im = r.f64();
            dm.values(Eigen::Index(a), Eigen::Index(b)) = cplx(re, im);
        }
    Reader tail(bytes, bytes.size());
    tail.skip(body_end);
    const std::uint64_t stored = tail.u64();
    if (stored != fnv1a(bytes.substr(0, body_end)))
        throw SchemaError("density matrix checksum mismatch in " + path.string());
    return dm;
}

void write_profile_csv(const DensityMatrix& dm, const std::filesystem::path& path)
{
    auto out = detail::open_csv(path);
    out << "x,rho\n";
    for (int k = 0; k < dm.size(); ++k)
        out << detail::fmt(dm.grid[k]) << ',' << detail::fmt(dm.values(k, k).real()) << '\n';
    if (!out)
        throw IoError("write to " + path.string() + " failed");
}

void write_carpet_csv(const DensityMatrix& dm, const std::filesystem::path& path)
{
    auto out = detail::open_csv(path);
    out << "x,x_prime,re,im,abs\n";
    for (int a = 0; a < dm.size(); ++a)
        for (int b = 0; b < dm.size(); ++b) {
            const cplx v = dm.values(a, b);
            out << detail::fmt(dm.grid[b]) << ',' << detail::fmt(dm.grid[a]) << ',' << detail::fmt(v.real()) << ','
                << detail::fmt(v.imag()) << ',' << detail::fmt(std::abs(v)) << '\n';
        }
    if (!out)
        throw IoError("write to " + path.string() + " failed");
}

} // namespace soliton

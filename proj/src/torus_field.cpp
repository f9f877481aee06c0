#include "npsh/torus_field.hpp"

#include "npsh/errors.hpp"

#include <fftw3.h>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace npsh {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

bool is_power_of_two(int v)
{
    return v > 0 && (v & (v - 1)) == 0;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Grid and fields

TorusGrid::TorusGrid(int n, int N, int active) : n_(n), N_(N), active_(active < 0 ? n : active)
{
    if (n < 2 || n > kMaxDimension) throw std::invalid_argument("TorusGrid: n must lie in [2, 8]");
    if (!is_power_of_two(N) || N < 4 || N > 64) {
        throw std::invalid_argument("TorusGrid: N must be a power of two in [4, 64]");
    }
    if (active_ < 1 || active_ > n) throw std::invalid_argument("TorusGrid: active must lie in [1, n]");
    size_ = 1;
    for (int a = 0; a < real_axes(); ++a) {
        if (size_ > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(N)) {
            throw std::invalid_argument("TorusGrid: too many points");
        }
        size_ *= static_cast<std::size_t>(N);
    }
}

int TorusGrid::index(std::size_t p, int axis) const
{
    const int shift = real_axes() - 1 - axis;
    for (int s = 0; s < shift; ++s) p /= static_cast<std::size_t>(N_);
    return static_cast<int>(p % static_cast<std::size_t>(N_));
}

double TorusGrid::coordinate(std::size_t p, int axis) const
{
    return static_cast<double>(index(p, axis)) / N_;
}

ScalarField::ScalarField(TorusGrid grid, double value) : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(TorusGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values))
{
    if (values_.size() != grid_.size()) throw std::invalid_argument("ScalarField: size does not match grid");
}

ScalarField ScalarField::sample(const TorusGrid& grid, const std::function<double(std::span<const double>)>& f)
{
    ScalarField out(grid);
    std::vector<double> x(static_cast<std::size_t>(grid.real_axes()));
    for (std::size_t p = 0; p < grid.size(); ++p) {
        for (int a = 0; a < grid.real_axes(); ++a) x[static_cast<std::size_t>(a)] = grid.coordinate(p, a);
        out.values_[p] = f(x);
    }
    return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& o)
{
    if (!(grid_ == o.grid_)) throw std::invalid_argument("ScalarField: grid mismatch");
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += o.values_[p];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o)
{
    if (!(grid_ == o.grid_)) throw std::invalid_argument("ScalarField: grid mismatch");
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] -= o.values_[p];
    return *this;
}

ScalarField& ScalarField::operator*=(double s)
{
    for (double& v : values_) v *= s;
    return *this;
}

ScalarField& ScalarField::operator+=(double c)
{
    for (double& v : values_) v += c;
    return *this;
}

MatrixField::MatrixField(TorusGrid grid)
    : grid_(grid), data_(grid.size() * static_cast<std::size_t>(grid.n() * grid.n()))
{
}

MatrixField::MatrixField(TorusGrid grid, std::vector<Complex> data) : grid_(grid), data_(std::move(data))
{
    if (data_.size() != grid_.size() * static_cast<std::size_t>(grid_.n() * grid_.n())) {
        throw std::invalid_argument("MatrixField: size does not match grid");
    }
}

MatrixField MatrixField::constant(const TorusGrid& grid, const HermitianMatrix& m)
{
    if (m.dim() != grid.n()) throw std::invalid_argument("MatrixField: matrix dimension does not match grid");
    MatrixField out(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) out.set(p, m);
    return out;
}

HermitianMatrix MatrixField::at(std::size_t p) const
{
    const int n = dim();
    const Complex* base = data_.data() + p * static_cast<std::size_t>(n * n);
    ComplexMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = base[i * n + j];
    return HermitianMatrix::from_raw(m);
}

void MatrixField::set(std::size_t p, const HermitianMatrix& m)
{
    const int n = dim();
    Complex* base = data_.data() + p * static_cast<std::size_t>(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) base[i * n + j] = m(i, j);
}

double pairwise_sum(std::span<const double> x)
{
    if (x.size() <= 16) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

double mean(const ScalarField& f)
{
    return pairwise_sum(f.values()) / static_cast<double>(f.size());
}

double sup(const ScalarField& f)
{
    return *std::max_element(f.values().begin(), f.values().end());
}

double inf(const ScalarField& f)
{
    return *std::min_element(f.values().begin(), f.values().end());
}

double sup_norm(const ScalarField& f)
{
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

ScalarField sup_normalize(const ScalarField& f)
{
    ScalarField out = f;
    out += -sup(f);
    return out;
}

ScalarField mean_normalize(const ScalarField& f)
{
    ScalarField out = f;
    out += -mean(f);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Spectral operators

struct Spectral::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;

    ~Plans()
    {
        std::lock_guard lock(planner_mutex());
        if (r2c) fftw_destroy_plan(r2c);
        if (c2r) fftw_destroy_plan(c2r);
    }
};

Spectral::Spectral(const TorusGrid& grid) : grid_(grid), axes_(grid.real_axes()), plans_(std::make_unique<Plans>())
{
    const int N = grid.N();
    std::vector<int> dims(static_cast<std::size_t>(axes_), N);
    modes_ = grid.size() / static_cast<std::size_t>(N) * static_cast<std::size_t>(N / 2 + 1);

    k_.resize(modes_ * static_cast<std::size_t>(axes_));
    for (std::size_t m = 0; m < modes_; ++m) {
        std::size_t rem = m;
        for (int a = axes_ - 1; a >= 0; --a) {
            const std::size_t extent = (a == axes_ - 1) ? static_cast<std::size_t>(N / 2 + 1) : static_cast<std::size_t>(N);
            const int idx = static_cast<int>(rem % extent);
            rem /= extent;
            k_[m * static_cast<std::size_t>(axes_) + a] = (a == axes_ - 1 || idx < N / 2) ? idx : idx - N;
        }
    }

    std::vector<double> real_buf(grid.size());
    std::vector<Complex> complex_buf(modes_);
    auto* in = real_buf.data();
    auto* out = reinterpret_cast<fftw_complex*>(complex_buf.data());
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->r2c = fftw_plan_dft_r2c(axes_, dims.data(), in, out, flags);
    plans_->c2r = fftw_plan_dft_c2r(axes_, dims.data(), out, in, flags | FFTW_DESTROY_INPUT);
    if (!plans_->r2c || !plans_->c2r) throw Error("FFTW planning failed");
}

Spectral::~Spectral() = default;

std::vector<Complex> Spectral::forward(std::span<const double> values) const
{
    std::vector<Complex> out(modes_);
    // FFTW does not modify the input of an out-of-place r2c transform.
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(values.data()), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

void Spectral::backward(std::vector<Complex>& coeffs, std::span<double> out) const
{
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(coeffs.data()), out.data());
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (double& v : out) v *= scale;
}

double Spectral::second_symbol(std::size_t m, int a, int b) const
{
    const int ka = wavenumber(m, a);
    if (a == b) return -(kTwoPi * ka) * (kTwoPi * ka);
    const int kb = wavenumber(m, b);
    const int nyq = grid_.N() / 2;
    if (std::abs(ka) == nyq || std::abs(kb) == nyq) return 0.0;
    return -kTwoPi * kTwoPi * ka * kb;
}

int Spectral::pair_index(int a, int b) const
{
    if (a > b) std::swap(a, b);
    // Row-major packing of the upper triangle.
    return a * axes_ - a * (a - 1) / 2 + (b - a);
}

std::vector<std::vector<double>> Spectral::real_hessian(const ScalarField& u) const
{
    if (!(u.grid() == grid_)) throw std::invalid_argument("Spectral: grid mismatch");
    const std::vector<Complex> uhat = forward(u.values());
    std::vector<std::vector<double>> out(static_cast<std::size_t>(pair_count()));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int t = 0; t < pair_count(); ++t) {
        int a = 0;
        while (pair_index(a, axes_ - 1) < t) ++a;
        const int b = a + (t - pair_index(a, a));
        std::vector<Complex> c(modes_);
        for (std::size_t m = 0; m < modes_; ++m) c[m] = second_symbol(m, a, b) * uhat[m];
        std::vector<double> d(grid_.size());
        backward(c, d);
        out[static_cast<std::size_t>(t)] = std::move(d);
    }
    return out;
}

std::vector<std::vector<double>> Spectral::complex_hessian_parts(const ScalarField& u) const
{
    if (!(u.grid() == grid_)) throw std::invalid_argument("Spectral: grid mismatch");
    const std::vector<Complex> uhat = forward(u.values());
    const int act = grid_.active();
    struct Part {
        int i, j;
        bool imag;
    };
    std::vector<Part> parts;
    for (int i = 0; i < act; ++i) {
        for (int j = i; j < act; ++j) {
            parts.push_back({i, j, false});
            if (j > i) parts.push_back({i, j, true});
        }
    }
    std::vector<std::vector<double>> out(parts.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t t = 0; t < parts.size(); ++t) {
        const int xi = 2 * parts[t].i, yi = xi + 1, xj = 2 * parts[t].j, yj = xj + 1;
        std::vector<Complex> c(modes_);
        for (std::size_t m = 0; m < modes_; ++m) {
            const double sigma = parts[t].imag ? second_symbol(m, xi, yj) - second_symbol(m, yi, xj)
                                               : second_symbol(m, xi, xj) + second_symbol(m, yi, yj);
            c[m] = 0.25 * sigma * uhat[m];
        }
        std::vector<double> d(grid_.size());
        backward(c, d);
        out[t] = std::move(d);
    }
    return out;
}

std::vector<std::vector<double>> Spectral::real_gradient(const ScalarField& u) const
{
    if (!(u.grid() == grid_)) throw std::invalid_argument("Spectral: grid mismatch");
    const std::vector<Complex> uhat = forward(u.values());
    const int nyq = grid_.N() / 2;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(axes_));
    for (int a = 0; a < axes_; ++a) {
        std::vector<Complex> c(modes_);
        for (std::size_t m = 0; m < modes_; ++m) {
            const int k = wavenumber(m, a);
            c[m] = (std::abs(k) == nyq) ? Complex{} : Complex(0.0, kTwoPi * k) * uhat[m];
        }
        std::vector<double> d(grid_.size());
        backward(c, d);
        out[static_cast<std::size_t>(a)] = std::move(d);
    }
    return out;
}

ScalarField Spectral::contract(const ScalarField& u, std::span<const double> coeffs) const
{
    const auto T = static_cast<std::size_t>(pair_count());
    if (coeffs.size() != T * grid_.size()) throw std::invalid_argument("Spectral::contract: bad coefficient size");
    const auto d = real_hessian(u);
    ScalarField out(grid_);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t p = 0; p < grid_.size(); ++p) {
        double s = 0.0;
        for (int a = 0; a < axes_; ++a) {
            for (int b = a; b < axes_; ++b) {
                const auto t = static_cast<std::size_t>(pair_index(a, b));
                const double w = (a == b) ? 1.0 : 2.0;
                s += w * coeffs[p * T + t] * d[t][p];
            }
        }
        out[p] = s;
    }
    return out;
}

ScalarField Spectral::apply_constant(const ScalarField& u, std::span<const double> coeffs) const
{
    if (coeffs.size() != static_cast<std::size_t>(pair_count())) {
        throw std::invalid_argument("Spectral::apply_constant: bad coefficient size");
    }
    std::vector<Complex> c = forward(u.values());
    for (std::size_t m = 0; m < modes_; ++m) {
        double sigma = 0.0;
        for (int a = 0; a < axes_; ++a)
            for (int b = a; b < axes_; ++b)
                sigma += ((a == b) ? 1.0 : 2.0) * coeffs[static_cast<std::size_t>(pair_index(a, b))] * second_symbol(m, a, b);
        c[m] *= sigma;
    }
    ScalarField out(grid_);
    backward(c, out.values());
    return out;
}

ScalarField Spectral::solve_constant(const ScalarField& f, std::span<const double> coeffs) const
{
    if (coeffs.size() != static_cast<std::size_t>(pair_count())) {
        throw std::invalid_argument("Spectral::solve_constant: bad coefficient size");
    }
    std::vector<Complex> c = forward(f.values());
    for (std::size_t m = 0; m < modes_; ++m) {
        double sigma = 0.0;
        for (int a = 0; a < axes_; ++a)
            for (int b = a; b < axes_; ++b)
                sigma += ((a == b) ? 1.0 : 2.0) * coeffs[static_cast<std::size_t>(pair_index(a, b))] * second_symbol(m, a, b);
        c[m] = (m == 0 || sigma == 0.0) ? Complex{} : c[m] / sigma;
    }
    ScalarField out(grid_);
    backward(c, out.values());
    return out;
}

MatrixField spectral_hessian(const Spectral& ops, const ScalarField& u)
{
    const TorusGrid& grid = u.grid();
    const auto parts = ops.complex_hessian_parts(u);
    const int n = grid.n();
    const int act = grid.active();
    MatrixField out(grid);
    ComplexMatrix m(n, n);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        m.setZero();
        std::size_t c = 0;
        for (int i = 0; i < act; ++i) {
            for (int j = i; j < act; ++j) {
                const double re = parts[c++][p];
                const double im = (j > i) ? parts[c++][p] : 0.0;
                m(i, j) = Complex(re, im);
                m(j, i) = Complex(re, -im);
            }
        }
        out.set(p, HermitianMatrix::from_raw(m));
    }
    return out;
}

MatrixField spectral_hessian(const ScalarField& u)
{
    const Spectral ops(u.grid());
    return spectral_hessian(ops, u);
}

ScalarField laplacian(const HermitianMatrix& g, const ScalarField& u)
{
    const Metric metric(g);
    if (g.dim() != u.grid().n()) throw std::invalid_argument("laplacian: metric dimension does not match grid");
    const MatrixField hess = spectral_hessian(u);
    ScalarField out(u.grid());
    for (std::size_t p = 0; p < u.size(); ++p) out[p] = metric.trace(hess.at(p));
    return out;
}

std::vector<std::vector<Complex>> complex_gradient(const Spectral& ops, const ScalarField& u)
{
    const TorusGrid& grid = u.grid();
    const auto d = ops.real_gradient(u);
    std::vector<std::vector<Complex>> out(static_cast<std::size_t>(grid.n()), std::vector<Complex>(grid.size()));
    for (int j = 0; j < grid.active(); ++j) {
        const auto& dx = d[static_cast<std::size_t>(2 * j)];
        const auto& dy = d[static_cast<std::size_t>(2 * j + 1)];
        auto& dst = out[static_cast<std::size_t>(j)];
        for (std::size_t p = 0; p < grid.size(); ++p) dst[p] = 0.5 * Complex(dx[p], -dy[p]);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Field files

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void write_doubles(std::ofstream& os, const double* data, std::size_t count)
{
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            auto bits = std::bit_cast<std::uint64_t>(data[i]);
            bits = __builtin_bswap64(bits);
            os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
}

void write_any(const std::string& path, const TorusGrid& grid, const char* kind, const double* data, std::size_t count)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FieldIoError(path, "cannot open for writing");
    nlohmann::json header = {
        {"format", "npsh-field"}, {"version", 1},       {"n", grid.n()},
        {"N", grid.N()},          {"active", grid.active()}, {"kind", kind},
        {"layout", "row-major"},  {"packing", "complex-interleaved"}, {"count", count},
    };
    os << header.dump() << '\n';
    write_doubles(os, data, count);
    if (!os) throw FieldIoError(path, "write failed");
}

struct RawField {
    TorusGrid grid;
    std::vector<double> values;
};

RawField read_any(const std::string& path, const std::string& expected_kind)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FieldIoError(path, "cannot open for reading");
    std::string line;
    if (!std::getline(is, line)) throw FieldIoError(path, "missing header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FieldIoError(path, std::string("malformed header: ") + e.what());
    }
    const auto get_int = [&](const char* key) {
        if (!header.contains(key) || !header[key].is_number_integer()) {
            throw FieldIoError(path, std::string("header field '") + key + "' missing or not an integer");
        }
        return header[key].get<long long>();
    };
    if (header.value("format", "") != "npsh-field") throw FieldIoError(path, "not an npsh field file");
    const std::string kind = header.value("kind", "");
    if (kind != expected_kind) throw FieldIoError(path, "kind mismatch: expected " + expected_kind + ", found '" + kind + "'");
    if (header.value("layout", "") != "row-major" || header.value("packing", "") != "complex-interleaved") {
        throw FieldIoError(path, "unsupported layout or packing");
    }
    const long long n = get_int("n"), N = get_int("N"), active = get_int("active"), count = get_int("count");
    std::optional<TorusGrid> grid;
    try {
        grid.emplace(static_cast<int>(n), static_cast<int>(N), static_cast<int>(active));
    } catch (const std::invalid_argument& e) {
        throw FieldIoError(path, std::string("invalid grid in header: ") + e.what());
    }
    const std::size_t per_point = (kind == "scalar") ? 1 : static_cast<std::size_t>(2 * n * n);
    const std::size_t expected = grid->size() * per_point;
    if (count < 0 || static_cast<std::size_t>(count) != expected) {
        throw FieldIoError(path, "shape mismatch: header count " + std::to_string(count) + " but grid needs " + std::to_string(expected));
    }
    std::vector<double> values(expected);
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != expected * sizeof(double)) {
        throw FieldIoError(path, "truncated payload");
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FieldIoError(path, "trailing data after payload");
    if constexpr (std::endian::native == std::endian::big) {
        for (double& v : values) v = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(v)));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw FieldIoError(path, "non-finite value in payload");
    }
    return {*grid, std::move(values)};
}

}  // namespace

void write_field(const std::string& path, const ScalarField& f)
{
    write_any(path, f.grid(), "scalar", f.values().data(), f.size());
}

void write_field(const std::string& path, const MatrixField& f)
{
    const auto data = f.data();
    write_any(path, f.grid(), "matrix", reinterpret_cast<const double*>(data.data()), 2 * data.size());
}

ScalarField read_scalar_field(const std::string& path)
{
    RawField raw = read_any(path, "scalar");
    return ScalarField(raw.grid, std::move(raw.values));
}

MatrixField read_matrix_field(const std::string& path)
{
    RawField raw = read_any(path, "matrix");
    std::vector<Complex> data(raw.values.size() / 2);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = Complex(raw.values[2 * i], raw.values[2 * i + 1]);
    return MatrixField(raw.grid, std::move(data));
}

}  // namespace npsh

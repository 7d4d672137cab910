#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "kdvg/error.hpp"
#include "kdvg/fft.hpp"

namespace kdvg {

/// Periodic grid on [-half_length, half_length) standing in for the real line.
///
/// Frequencies are ξ_k = π k / half_length for k = -n/2 .. n/2 - 1, stored in
/// FFT order: index j holds k = j for j < n/2 and k = j - n otherwise.
class GridSpec {
public:
    GridSpec(std::size_t num_points, double half_length)
        : n_(num_points), half_length_(half_length) {
        if (num_points < 4 || (num_points & (num_points - 1)) != 0) {
            throw InvalidArgument("num_points must be a power of two >= 4, got " +
                                  std::to_string(num_points));
        }
        if (!(half_length > 0.0) || !std::isfinite(half_length)) {
            throw InvalidArgument("half_length must be positive and finite");
        }
    }

    std::size_t num_points() const noexcept { return n_; }
    double half_length() const noexcept { return half_length_; }
    double length() const noexcept { return 2.0 * half_length_; }
    double dx() const noexcept { return length() / static_cast<double>(n_); }
    double dxi() const noexcept { return std::numbers::pi / half_length_; }
    /// |ξ| of the Nyquist mode.
    double max_abs_xi() const noexcept { return dxi() * static_cast<double>(n_ / 2); }

    double x(std::size_t j) const noexcept { return -half_length_ + dx() * static_cast<double>(j); }

    long wavenumber(std::size_t j) const noexcept {
        const auto half = static_cast<long>(n_ / 2);
        const auto jj = static_cast<long>(j);
        return jj < half ? jj : jj - static_cast<long>(n_);
    }

    double xi(std::size_t j) const noexcept { return dxi() * static_cast<double>(wavenumber(j)); }

    std::size_t index_of(long k) const {
        const auto n = static_cast<long>(n_);
        if (k < -n / 2 || k >= n / 2) {
            throw InvalidArgument("wavenumber " + std::to_string(k) + " outside grid");
        }
        return static_cast<std::size_t>(k < 0 ? k + n : k);
    }

    bool is_nyquist(std::size_t j) const noexcept { return j == n_ / 2; }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    std::size_t n_;
    double half_length_;
};

/// Fourier coefficients of one time slice of a real field.
///
/// Coefficients carry the continuous-transform normalization
/// c_k = dx Σ_j v_j e^{-i ξ_k x_j}, so they approximate f̂(ξ_k) directly.
class SpectralField {
public:
    explicit SpectralField(GridSpec grid) : grid_(grid), coeffs_(grid.num_points()) {}

    SpectralField(GridSpec grid, std::vector<cplx> coeffs)
        : grid_(grid), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != grid_.num_points()) {
            throw InvalidArgument("coefficient count does not match grid");
        }
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return coeffs_.size(); }
    std::span<const cplx> coeffs() const noexcept { return coeffs_; }
    std::span<cplx> coeffs() noexcept { return coeffs_; }
    double xi(std::size_t j) const noexcept { return grid_.xi(j); }

    cplx coeff(long k) const { return coeffs_[grid_.index_of(k)]; }
    cplx& coeff(long k) { return coeffs_[grid_.index_of(k)]; }

private:
    GridSpec grid_;
    std::vector<cplx> coeffs_;
};

namespace detail {

inline RealFft& cached_real_fft(std::size_t n) {
    thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<RealFft>(n);
    return *slot;
}

inline ComplexFft& cached_complex_fft(std::size_t n) {
    thread_local std::map<std::size_t, std::unique_ptr<ComplexFft>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<ComplexFft>(n);
    return *slot;
}

inline double parity(std::size_t j) noexcept { return (j & 1U) ? -1.0 : 1.0; }

/// Coefficients -> unnormalized DFT half spectrum (the layout FFTW c2r expects).
inline void to_dft_half(const SpectralField& f, std::span<cplx> half) {
    const double inv_dx = 1.0 / f.grid().dx();
    const auto c = f.coeffs();
    for (std::size_t j = 0; j < half.size(); ++j) half[j] = parity(j) * c[j] * inv_dx;
}

}  // namespace detail

/// Physical samples -> coefficients.
inline SpectralField forward_transform(std::span<const double> values, const GridSpec& grid) {
    const std::size_t n = grid.num_points();
    if (values.size() != n) {
        throw InvalidArgument("forward_transform: expected " + std::to_string(n) +
                              " samples, got " + std::to_string(values.size()));
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(values[j])) {
            throw InvalidArgument("forward_transform: non-finite sample at x = " +
                                  std::to_string(grid.x(j)));
        }
    }
    auto& fft = detail::cached_real_fft(n);
    std::copy(values.begin(), values.end(), fft.real().begin());
    fft.forward();
    const auto half = fft.spectrum();
    std::vector<cplx> c(n);
    const double dx = grid.dx();
    for (std::size_t j = 0; j <= n / 2; ++j) c[j] = detail::parity(j) * dx * half[j];
    for (std::size_t j = n / 2 + 1; j < n; ++j) c[j] = std::conj(c[n - j]);
    return SpectralField(grid, std::move(c));
}

/// Coefficients -> physical samples. Only the Hermitian part is used.
inline std::vector<double> inverse_transform(const SpectralField& field) {
    const std::size_t n = field.grid().num_points();
    auto& fft = detail::cached_real_fft(n);
    detail::to_dft_half(field, fft.spectrum());
    fft.backward();
    std::vector<double> v(fft.real().begin(), fft.real().end());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : v) x *= inv_n;
    return v;
}

/// Full complex inverse; the imaginary part measures departure from reality.
inline std::vector<cplx> inverse_transform_complex(const SpectralField& field) {
    const std::size_t n = field.grid().num_points();
    auto& fft = detail::cached_complex_fft(n);
    auto buf = fft.data();
    const double inv_dx = 1.0 / field.grid().dx();
    const auto c = field.coeffs();
    for (std::size_t j = 0; j < n; ++j) buf[j] = detail::parity(j) * c[j] * inv_dx;
    fft.backward();
    std::vector<cplx> v(buf.begin(), buf.end());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : v) x *= inv_n;
    return v;
}

/// Samples a function of x on the grid.
template <typename F>
std::vector<double> sample(const GridSpec& grid, F&& f) {
    std::vector<double> v(grid.num_points());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid.x(j));
    return v;
}

template <typename F>
SpectralField transform_of(const GridSpec& grid, F&& f) {
    const auto v = sample(grid, std::forward<F>(f));
    return forward_transform(v, grid);
}

/// coeff(k) <- m(ξ_k) coeff(k).
///
/// Throws InvalidArgument naming the first frequency where m is not finite.
template <typename M>
SpectralField apply_multiplier(const SpectralField& field, M&& m) {
    SpectralField out = field;
    auto c = out.coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double xi = field.xi(j);
        const cplx mv = cplx(m(xi));
        if (!std::isfinite(mv.real()) || !std::isfinite(mv.imag())) {
            throw InvalidArgument("multiplier is not finite at xi = " + std::to_string(xi));
        }
        c[j] *= mv;
    }
    return out;
}

/// (i ξ)^order applied; the Nyquist mode is dropped for odd orders so real
/// fields stay real.
inline SpectralField derivative(const SpectralField& field, int order = 1) {
    SpectralField out = field;
    auto c = out.coeffs();
    const cplx i(0.0, 1.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
        if ((order & 1) && field.grid().is_nyquist(j)) {
            c[j] = 0.0;
            continue;
        }
        c[j] *= std::pow(i * field.xi(j), order);
    }
    return out;
}

/// L² norm via Parseval: ‖f‖² = (1 / 2L) Σ_k |c_k|².
inline double l2_norm(const SpectralField& field) {
    double s = 0.0;
    for (const auto& c : field.coeffs()) s += std::norm(c);
    return std::sqrt(s / field.grid().length());
}

/// Discrete L² norm of physical samples, sqrt(dx Σ |v_j|²).
inline double l2_norm(std::span<const double> values, const GridSpec& grid) {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s * grid.dx());
}

/// max_k |c(-k) - conj c(k)| relative to max |c|.
inline double hermitian_defect(const SpectralField& field) {
    const auto c = field.coeffs();
    const std::size_t n = c.size();
    double peak = 0.0;
    double defect = 0.0;
    for (std::size_t j = 0; j < n; ++j) peak = std::max(peak, std::abs(c[j]));
    for (std::size_t j = 1; j < n / 2; ++j) {
        defect = std::max(defect, std::abs(c[n - j] - std::conj(c[j])));
    }
    return peak > 0.0 ? defect / peak : 0.0;
}

inline SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("grid mismatch in field sum");
    SpectralField out = a;
    auto c = out.coeffs();
    const auto d = b.coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += d[j];
    return out;
}

inline SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("grid mismatch in field difference");
    SpectralField out = a;
    auto c = out.coeffs();
    const auto d = b.coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) c[j] -= d[j];
    return out;
}

inline SpectralField operator*(double s, const SpectralField& a) {
    SpectralField out = a;
    for (auto& c : out.coeffs()) c *= s;
    return out;
}

/// Padded length that removes aliasing from a quadratic product when a
/// fraction `dealias` of the padded spectrum is retained (2/3 -> 3n/2).
inline std::size_t padded_length(std::size_t n, double dealias) {
    if (!(dealias > 0.0 && dealias <= 1.0)) {
        throw InvalidArgument("dealias fraction must lie in (0, 1]");
    }
    auto m = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / dealias - 1e-9));
    if (m & 1U) ++m;
    return std::max(m, n);
}

/// Product of two real fields, computed on a zero-padded grid and truncated
/// back. The Nyquist mode of the result is zero.
inline SpectralField dealiased_product(const SpectralField& a, const SpectralField& b,
                                       double dealias = 2.0 / 3.0) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("grid mismatch in product");
    const GridSpec& grid = a.grid();
    const std::size_t n = grid.num_points();
    const std::size_t m = padded_length(n, dealias);
    auto& fft = detail::cached_real_fft(m);
    const double inv_n = 1.0 / static_cast<double>(n);

    auto to_physical = [&](const SpectralField& f, std::vector<double>& out) {
        auto spec = fft.spectrum();
        std::fill(spec.begin(), spec.end(), cplx{});
        detail::to_dft_half(f, spec.first(n / 2));
        fft.backward();
        out.assign(fft.real().begin(), fft.real().end());
        for (auto& v : out) v *= inv_n;
    };

    std::vector<double> ua;
    std::vector<double> ub;
    to_physical(a, ua);
    to_physical(b, ub);
    auto real = fft.real();
    for (std::size_t j = 0; j < m; ++j) real[j] = ua[j] * ub[j];
    fft.forward();
    const auto spec = fft.spectrum();
    std::vector<cplx> c(n);
    const double scale = grid.dx() * static_cast<double>(n) / static_cast<double>(m);
    for (std::size_t j = 0; j < n / 2; ++j) c[j] = detail::parity(j) * scale * spec[j];
    for (std::size_t j = n / 2 + 1; j < n; ++j) c[j] = std::conj(c[n - j]);
    return SpectralField(grid, std::move(c));
}

/// max |u| over the outer edge strips relative to max |u| overall.
///
/// Each strip holds n/128 points (at least one) on either side of the seam.
inline double boundary_ratio(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    const std::size_t strip = std::max<std::size_t>(1, n / 128);
    double peak = 0.0;
    double edge = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = std::abs(values[j]);
        peak = std::max(peak, a);
        if (j < strip || j >= n - strip) edge = std::max(edge, a);
    }
    return peak > 0.0 ? edge / peak : 0.0;
}

/// Throws DomainTooSmall when the field is not negligible at the seam.
inline void check_boundary(std::span<const double> values, double time, double tol = 1e-10) {
    const double r = boundary_ratio(values);
    if (r > tol) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "domain too small: edge/peak ratio %.3e exceeds %.3e at t = %.6g", r, tol,
                      time);
        throw DomainTooSmall(msg, time);
    }
}

}  // namespace kdvg

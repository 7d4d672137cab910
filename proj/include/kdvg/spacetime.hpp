#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kdvg/cutoff.hpp"
#include "kdvg/error.hpp"
#include "kdvg/fft.hpp"
#include "kdvg/spectral_core.hpp"

namespace kdvg {

inline constexpr std::size_t time_padding_factor = 4;
inline constexpr std::size_t min_time_samples = 8;

/// Samples u(t_j, x_k) on a uniform time window times a spatial grid.
///
/// Values are complex so that modulation projections of real data (which are
/// not real in general after truncation to a window) can be stored as well.
/// Row j holds time t_j, column k holds x_k.
///
/// A field is "raw" when it still needs the temporal taper and zero padding
/// before transforming, and "prepared" once that has been done (the output of
/// every space-time inverse transform is prepared).
class SpacetimeField {
public:
    SpacetimeField(GridSpec grid, double t_begin, double t_end, std::size_t num_times,
                   bool prepared = false)
        : grid_(grid), t_begin_(t_begin), t_end_(t_end), nt_(num_times), prepared_(prepared),
          values_(num_times * grid.num_points()) {
        if (num_times < min_time_samples) {
            throw InvalidArgument("space-time field needs at least " +
                                  std::to_string(min_time_samples) + " time samples, got " +
                                  std::to_string(num_times));
        }
        if (!(t_end > t_begin) || !std::isfinite(t_end - t_begin)) {
            throw InvalidArgument("time window must have t_end > t_begin");
        }
    }

    const GridSpec& grid() const noexcept { return grid_; }
    double t_begin() const noexcept { return t_begin_; }
    double t_end() const noexcept { return t_end_; }
    std::size_t num_times() const noexcept { return nt_; }
    std::size_t num_points() const noexcept { return grid_.num_points(); }
    bool prepared() const noexcept { return prepared_; }
    double dt() const noexcept { return (t_end_ - t_begin_) / static_cast<double>(nt_ - 1); }
    double time(std::size_t j) const noexcept { return t_begin_ + dt() * static_cast<double>(j); }

    cplx& at(std::size_t j, std::size_t k) noexcept { return values_[j * num_points() + k]; }
    const cplx& at(std::size_t j, std::size_t k) const noexcept {
        return values_[j * num_points() + k];
    }
    std::span<cplx> row(std::size_t j) noexcept { return {values_.data() + j * num_points(), num_points()}; }
    std::span<const cplx> row(std::size_t j) const noexcept {
        return {values_.data() + j * num_points(), num_points()};
    }
    std::span<cplx> values() noexcept { return values_; }
    std::span<const cplx> values() const noexcept { return values_; }

    /// Temporal taper chi((t - c) / (W/4)): one on the inner half of the
    /// window, zero at its ends.
    double taper(double t) const noexcept {
        const double c = 0.5 * (t_begin_ + t_end_);
        return chi((t - c) / (0.25 * (t_end_ - t_begin_)));
    }

    /// Space-time L² norm sqrt(dt dx Σ |u|²) of the stored samples.
    double l2_norm() const noexcept {
        double s = 0.0;
        for (const auto& v : values_) s += std::norm(v);
        return std::sqrt(s * dt() * grid_.dx());
    }

private:
    GridSpec grid_;
    double t_begin_;
    double t_end_;
    std::size_t nt_;
    bool prepared_;
    std::vector<cplx> values_;
};

/// Samples a real field given as a function of (t, x).
template <typename F>
SpacetimeField sample_spacetime(const GridSpec& grid, double t_begin, double t_end,
                                std::size_t num_times, F&& u) {
    SpacetimeField out(grid, t_begin, t_end, num_times);
    for (std::size_t j = 0; j < num_times; ++j) {
        const double t = out.time(j);
        for (std::size_t k = 0; k < grid.num_points(); ++k) out.at(j, k) = u(t, grid.x(k));
    }
    return out;
}

/// Tapers and zero-pads a raw field; returns prepared fields unchanged.
///
/// The original samples sit in the middle of a window time_padding_factor
/// times as long, on the same time step.
inline SpacetimeField prepare(const SpacetimeField& field) {
    if (field.prepared()) return field;
    const std::size_t nt = field.num_times();
    const std::size_t np = nt * time_padding_factor;
    const std::size_t offset = (np - nt) / 2;
    const double dt = field.dt();
    const double t0 = field.t_begin() - static_cast<double>(offset) * dt;
    SpacetimeField out(field.grid(), t0, t0 + static_cast<double>(np - 1) * dt, np, true);
    for (std::size_t j = 0; j < nt; ++j) {
        const double w = field.taper(field.time(j));
        const auto src = field.row(j);
        auto dst = out.row(j + offset);
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] = w * src[k];
    }
    return out;
}

/// ũ(τ_m, ξ_k) on the prepared window, continuous normalization
/// ũ = dt dx Σ u(t_j, x_k) e^{-i(τ t_j + ξ x_k)}.
///
/// The τ grid is periodic with period 2π/dt. modulation(m, k) evaluates
/// τ - ξ³ using the alias of τ_m nearest to ξ_k³, so only the modulation
/// bandwidth, not ξ³ itself, has to be resolved in time.
class SpacetimeSpectrum {
public:
    SpacetimeSpectrum(GridSpec grid, double t_origin, double dt, std::size_t num_times,
                      std::vector<cplx> values)
        : grid_(grid), t_origin_(t_origin), dt_(dt), nt_(num_times), values_(std::move(values)) {
        if (values_.size() != nt_ * grid_.num_points()) {
            throw InvalidArgument("space-time spectrum has wrong size");
        }
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t num_times() const noexcept { return nt_; }
    std::size_t num_points() const noexcept { return grid_.num_points(); }
    double dt() const noexcept { return dt_; }
    double t_origin() const noexcept { return t_origin_; }
    double window_length() const noexcept { return dt_ * static_cast<double>(nt_); }
    double dtau() const noexcept { return 2.0 * std::numbers::pi / window_length(); }
    /// Half the τ period; the largest resolvable |τ - ξ³|.
    double max_modulation() const noexcept { return std::numbers::pi / dt_; }

    double tau(std::size_t m) const noexcept {
        const auto mm = static_cast<long>(m);
        const auto n = static_cast<long>(nt_);
        return dtau() * static_cast<double>(mm < n / 2 ? mm : mm - n);
    }
    double xi(std::size_t k) const noexcept { return grid_.xi(k); }

    double modulation(std::size_t m, std::size_t k) const noexcept {
        const double period = 2.0 * std::numbers::pi / dt_;
        const double xi3 = xi(k) * xi(k) * xi(k);
        const double d = tau(m) - xi3;
        return d - period * std::nearbyint(d / period);
    }

    cplx& at(std::size_t m, std::size_t k) noexcept { return values_[m * num_points() + k]; }
    const cplx& at(std::size_t m, std::size_t k) const noexcept {
        return values_[m * num_points() + k];
    }
    std::span<cplx> values() noexcept { return values_; }
    std::span<const cplx> values() const noexcept { return values_; }

    /// Space-time L² norm of the underlying field via Parseval.
    double l2_norm() const noexcept {
        double s = 0.0;
        for (const auto& v : values_) s += std::norm(v);
        return std::sqrt(s / (window_length() * grid_.length()));
    }

    /// Squared-norm factor 1 / (|time window| · |space window|).
    double parseval_weight() const noexcept { return 1.0 / (window_length() * grid_.length()); }

private:
    GridSpec grid_;
    double t_origin_;
    double dt_;
    std::size_t nt_;
    std::vector<cplx> values_;
};

/// 2D transform of a field; raw fields are prepared first.
inline SpacetimeSpectrum spacetime_transform(const SpacetimeField& field) {
    const SpacetimeField f = prepare(field);
    const std::size_t nt = f.num_times();
    const std::size_t nx = f.num_points();
    const double dt = f.dt();
    const double dx = f.grid().dx();
    ComplexFft fft(nt, nx);
    auto buf = fft.data();
    std::copy(f.values().begin(), f.values().end(), buf.begin());
    fft.forward();
    std::vector<cplx> out(buf.begin(), buf.end());
    SpacetimeSpectrum spec(f.grid(), f.t_begin(), dt, nt, std::move(out));
    const double t0 = f.t_begin();
    for (std::size_t m = 0; m < nt; ++m) {
        const double ph = -spec.tau(m) * t0;
        const cplx shift = std::polar(dt * dx, ph);
        auto* r = &spec.at(m, 0);
        for (std::size_t k = 0; k < nx; ++k) r[k] *= detail::parity(k) * shift;
    }
    return spec;
}

/// Inverse of spacetime_transform; yields a prepared field on the padded window.
inline SpacetimeField inverse_spacetime_transform(const SpacetimeSpectrum& spec) {
    const std::size_t nt = spec.num_times();
    const std::size_t nx = spec.num_points();
    const double dt = spec.dt();
    const double t0 = spec.t_origin();
    ComplexFft fft(nt, nx);
    auto buf = fft.data();
    const double scale = 1.0 / (dt * spec.grid().dx() * static_cast<double>(nt * nx));
    for (std::size_t m = 0; m < nt; ++m) {
        const cplx shift = std::polar(scale, spec.tau(m) * t0);
        for (std::size_t k = 0; k < nx; ++k) {
            buf[m * nx + k] = spec.at(m, k) * detail::parity(k) * shift;
        }
    }
    fft.backward();
    SpacetimeField out(spec.grid(), t0, t0 + static_cast<double>(nt - 1) * dt, nt, true);
    std::copy(buf.begin(), buf.end(), out.values().begin());
    return out;
}

/// Throws ResolutionError when the τ spacing cannot resolve the unit
/// modulation band (bin wider than 2).
inline void require_unit_band_resolved(const SpacetimeSpectrum& spec) {
    if (spec.dtau() > 2.0) {
        throw ResolutionError("time window too short: tau bin " + std::to_string(spec.dtau()) +
                              " exceeds 2");
    }
}

}  // namespace kdvg

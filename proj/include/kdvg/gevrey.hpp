#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kdvg/error.hpp"
#include "kdvg/spectral_core.hpp"

namespace kdvg {

/// (σ, s) pair of the norm ‖e^{σ|D|}⟨D⟩^s f‖_{L²}.
struct GevreyParams {
    double sigma = 0.0;
    double s = 0.0;

    void validate() const {
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
            throw InvalidArgument("Gevrey sigma must be finite and >= 0");
        }
        if (!std::isfinite(s)) throw InvalidArgument("Sobolev index must be finite");
    }
};

/// Weighted log-magnitudes above this are treated as overflow.
inline constexpr double log_overflow_threshold = 700.0;

namespace detail {

inline double log_weight(double xi, double sigma, double s) {
    return sigma * std::abs(xi) + 0.5 * s * std::log1p(xi * xi);
}

/// Largest σ for which every weighted coefficient stays below the threshold.
inline double certifiable_sigma(const SpectralField& f, double s) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double a = std::abs(f.coeffs()[j]);
        const double xi = std::abs(f.xi(j));
        if (a == 0.0 || xi == 0.0) continue;
        const double room = log_overflow_threshold - std::log(a) - 0.5 * s * std::log1p(xi * xi);
        best = std::min(best, std::max(0.0, room / xi));
    }
    return best;
}

[[noreturn]] inline void throw_overflow(const SpectralField& f, double sigma, double s) {
    const double cert = certifiable_sigma(f, s);
    throw OverflowError("e^{sigma|xi|} weighting overflows at sigma = " + std::to_string(sigma) +
                            "; certifiable sigma is " + std::to_string(cert),
                        cert);
}

}  // namespace detail

/// ‖e^{σ|D|}⟨D⟩^s f‖ with continuous normalization, summed in log space.
inline double gevrey_norm(const SpectralField& f, const GevreyParams& p) {
    p.validate();
    const auto c = f.coeffs();
    std::vector<double> logs(c.size(), -std::numeric_limits<double>::infinity());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double a = std::abs(c[j]);
        if (a == 0.0) continue;
        logs[j] = std::log(a) + detail::log_weight(f.xi(j), p.sigma, p.s);
        top = std::max(top, logs[j]);
    }
    if (top == -std::numeric_limits<double>::infinity()) return 0.0;
    if (top > log_overflow_threshold) detail::throw_overflow(f, p.sigma, p.s);
    double sum = 0.0;
    for (double l : logs) sum += std::exp(2.0 * (l - top));
    return std::exp(top) * std::sqrt(sum / f.grid().length());
}

inline double sobolev_norm(const SpectralField& f, double s) { return gevrey_norm(f, {0.0, s}); }

/// Applies e^{σ|D|}; σ may be negative. Positive σ is overflow-checked.
inline SpectralField smooth(const SpectralField& f, double sigma) {
    if (!std::isfinite(sigma)) throw InvalidArgument("smoothing sigma must be finite");
    if (sigma == 0.0) return f;
    SpectralField out = f;
    auto c = out.coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double a = std::abs(c[j]);
        if (a == 0.0) continue;
        const double w = sigma * std::abs(f.xi(j));
        if (std::log(a) + w > log_overflow_threshold) detail::throw_overflow(f, sigma, 0.0);
        c[j] *= std::exp(w);
    }
    return out;
}

/// Settings of the Fourier-tail fit behind estimate_radius.
struct RadiusFitPolicy {
    double floor_fraction = 1e-13;
    double ceiling_fraction = 1e-2;
    /// Keep this upper fraction of the admissible |ξ| band.
    double upper_fraction = 0.6;
    std::size_t min_bins = 8;
    /// Relative steepening (last third vs first third) that flags
    /// faster-than-exponential decay.
    double steepening = 0.25;
    /// Relative level that counts as the roundoff floor.
    double roundoff_fraction = 1e-14;
};

struct RadiusEstimate {
    double sigma_hat = 0.0;
    double xi_lo = 0.0;
    double xi_hi = 0.0;
    double residual = 0.0;
    std::size_t bins = 0;
    bool floor_hit = false;
    bool superexponential = false;
};

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y,
                             std::size_t from, std::size_t to) {
    const double n = static_cast<double>(to - from);
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = from; i < to; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = from; i < to; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double r = 0.0;
    for (std::size_t i = from; i < to; ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * x[i]);
        r += e * e;
    }
    fit.rms = std::sqrt(r / n);
    return fit;
}

}  // namespace detail

/// Exponential decay rate of |f̂| as a proxy for the analyticity radius.
///
/// Magnitudes of ±k are averaged, the window keeps bins between
/// floor_fraction and ceiling_fraction of the peak in the upper part of that
/// |ξ| band, and σ̂ is minus the least-squares slope of log|f̂| against |ξ|.
/// If the slope over the last third of the window is steeper than over the
/// first third by more than `steepening` (with the middle third in between),
/// the decay is flagged superexponential and σ̂ is the last-third slope.
/// floor_hit reports that the spectrum dropped to the roundoff floor before
/// the grid cutoff, i.e. the tail is resolved.
inline RadiusEstimate estimate_radius(const SpectralField& f, const RadiusFitPolicy& policy = {}) {
    const GridSpec& g = f.grid();
    const long half = static_cast<long>(g.num_points() / 2);
    std::vector<double> mag(static_cast<std::size_t>(half), 0.0);
    double peak = std::abs(f.coeff(0));
    for (long k = 1; k < half; ++k) {
        mag[static_cast<std::size_t>(k)] = 0.5 * (std::abs(f.coeff(k)) + std::abs(f.coeff(-k)));
        peak = std::max(peak, mag[static_cast<std::size_t>(k)]);
    }
    if (peak == 0.0) throw InvalidArgument("estimate_radius: zero field");

    const double lo = policy.floor_fraction * peak;
    const double hi = policy.ceiling_fraction * peak;
    long k_first = -1;
    long k_last = -1;
    for (long k = 1; k < half; ++k) {
        const double m = mag[static_cast<std::size_t>(k)];
        if (m >= lo && m <= hi) {
            if (k_first < 0) k_first = k;
            k_last = k;
        }
    }
    RadiusEstimate est;
    std::vector<double> xs;
    std::vector<double> ys;
    if (k_first > 0) {
        const double band_lo = g.dxi() * static_cast<double>(k_first);
        const double band_hi = g.dxi() * static_cast<double>(k_last);
        const double cut = band_hi - policy.upper_fraction * (band_hi - band_lo);
        for (long k = k_first; k <= k_last; ++k) {
            const double m = mag[static_cast<std::size_t>(k)];
            const double xi = g.dxi() * static_cast<double>(k);
            if (xi + 1e-12 < cut || m < lo || m > hi) continue;
            xs.push_back(xi);
            ys.push_back(std::log(m));
        }
    }
    if (xs.size() < policy.min_bins) {
        throw ResolutionError("insufficient spectral range: " + std::to_string(xs.size()) +
                              " usable bins, need " + std::to_string(policy.min_bins));
    }
    est.bins = xs.size();
    est.xi_lo = xs.front();
    est.xi_hi = xs.back();
    const auto fit = detail::least_squares(xs, ys, 0, xs.size());
    est.sigma_hat = -fit.slope;
    est.residual = fit.rms;

    const std::size_t third = xs.size() / 3;
    if (third >= 3) {
        const double s1 = detail::least_squares(xs, ys, 0, third).slope;
        const double s2 = detail::least_squares(xs, ys, third, xs.size() - third).slope;
        const double s3 = detail::least_squares(xs, ys, xs.size() - third, xs.size()).slope;
        const bool monotone = s1 < 0.0 && s2 <= s1 && s3 <= s2;
        if (monotone && s3 < (1.0 + policy.steepening) * s1) {
            est.superexponential = true;
            est.sigma_hat = -s3;
        }
    }

    const double floor = policy.roundoff_fraction * peak;
    for (long k = k_last + 1; k < half; ++k) {
        if (mag[static_cast<std::size_t>(k)] <= std::max(floor, lo)) {
            est.floor_hit = true;
            break;
        }
    }
    return est;
}

/// Spatial half of the KdV scaling u_λ(t, x) = λ² u(λ³t, λx) at t = 0.
///
/// The grid keeps its size and stretches to half_length/λ, so the scaled
/// coefficients are exactly λ·f̂(ξ/λ) on the scaled frequency set.
inline SpectralField scale_data(const SpectralField& f, double lambda,
                                double max_half_length = 1e6) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in (0, 1]");
    const double hl = f.grid().half_length() / lambda;
    if (hl > max_half_length) {
        throw InvalidArgument("scaled grid half_length " + std::to_string(hl) +
                              " exceeds the configured maximum " + std::to_string(max_half_length));
    }
    GridSpec g(f.grid().num_points(), hl);
    std::vector<cplx> c(f.coeffs().begin(), f.coeffs().end());
    for (auto& v : c) v *= lambda;
    return SpectralField(g, std::move(c));
}

/// λ^{3/2} (∫ e^{2λσ|ξ|} ⟨λξ⟩^{2s} |f̂(ξ)|² dξ/2π)^{1/2}, evaluated on f's grid.
///
/// Equals gevrey_norm(scale_data(f, λ), {σ, s}).
inline double scaled_norm(const SpectralField& f, double lambda, const GevreyParams& p) {
    p.validate();
    const auto c = f.coeffs();
    std::vector<double> logs;
    logs.reserve(c.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double a = std::abs(c[j]);
        if (a == 0.0) continue;
        const double xi = f.xi(j);
        logs.push_back(std::log(a) + detail::log_weight(lambda * xi, p.sigma, p.s));
        top = std::max(top, logs.back());
    }
    if (logs.empty()) return 0.0;
    if (top > log_overflow_threshold) detail::throw_overflow(f, lambda * p.sigma, p.s);
    double sum = 0.0;
    for (double l : logs) sum += std::exp(2.0 * (l - top));
    return std::pow(lambda, 1.5) * std::exp(top) * std::sqrt(sum / f.grid().length());
}

}  // namespace kdvg

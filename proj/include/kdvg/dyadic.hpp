#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kdvg/cutoff.hpp"
#include "kdvg/error.hpp"
#include "kdvg/gevrey.hpp"
#include "kdvg/solver.hpp"
#include "kdvg/spacetime.hpp"
#include "kdvg/spectral_core.hpp"

namespace kdvg {

/// P_N f = F⁻¹[β_N(ξ) f̂]. The ξ = 0 bin belongs to N = 1 (β_1(0) = 1).
inline SpectralField project_PN(const SpectralField& f, DyadicIndex n) {
    return apply_multiplier(f, [n](double xi) { return bump(n, xi); });
}

/// Largest dyadic N whose bump meets the grid's frequency band.
inline DyadicIndex top_frequency_block(const GridSpec& g) {
    return dyadic_ceiling(g.max_abs_xi()).doubled();
}

/// All inhomogeneous blocks P_1 f, P_2 f, ... that can be nonzero on the grid.
inline std::map<DyadicIndex, SpectralField> littlewood_paley(const SpectralField& f) {
    std::map<DyadicIndex, SpectralField> out;
    const auto top = top_frequency_block(f.grid());
    for (auto n = DyadicIndex::from_exponent(0); n <= top; n = n.doubled()) {
        out.emplace(n, project_PN(f, n));
    }
    return out;
}

/// Q_L u = F⁻¹[β_L(τ - ξ³) ũ]; the result lives on the prepared window.
///
/// Throws ResolutionError("time window too short") when a τ bin is wider
/// than 2, since the L = 1 band would then be unresolved.
inline SpacetimeField project_QL(const SpacetimeField& u, DyadicIndex l) {
    auto spec = spacetime_transform(u);
    require_unit_band_resolved(spec);
    for (std::size_t m = 0; m < spec.num_times(); ++m) {
        for (std::size_t k = 0; k < spec.num_points(); ++k) {
            spec.at(m, k) *= bump(l, spec.modulation(m, k));
        }
    }
    return inverse_spacetime_transform(spec);
}

/// ‖Q_L u‖ for every resolvable L, read off one transform.
struct ModulationProfile {
    std::map<DyadicIndex, double> block_norms;
    /// Largest L kept; Σ_{L ≤ max_resolved} β_L = 1 on every resolvable
    /// modulation, so nothing representable is dropped.
    DyadicIndex max_resolved;
    double max_modulation = 0.0;

    double x_norm() const {
        double s = 0.0;
        for (const auto& [l, v] : block_norms) s += std::sqrt(l.value()) * v;
        return s;
    }
};

namespace detail {

/// Σ_L L^{1/2} ‖Q_L P u‖ where P is the spatial multiplier `xi_weight`.
template <typename W>
ModulationProfile modulation_profile(const SpacetimeSpectrum& spec, W&& xi_weight) {
    require_unit_band_resolved(spec);
    ModulationProfile p;
    p.max_modulation = spec.max_modulation();
    p.max_resolved = dyadic_ceiling(p.max_modulation).doubled();
    const int top = p.max_resolved.exponent();
    std::vector<double> acc(static_cast<std::size_t>(top + 1), 0.0);
    std::vector<double> wx(spec.num_points());
    for (std::size_t k = 0; k < wx.size(); ++k) wx[k] = xi_weight(spec.xi(k));
    for (std::size_t m = 0; m < spec.num_times(); ++m) {
        for (std::size_t k = 0; k < spec.num_points(); ++k) {
            if (wx[k] == 0.0) continue;
            const double e = std::norm(spec.at(m, k) * wx[k]);
            if (e == 0.0) continue;
            const double lam = std::abs(spec.modulation(m, k));
            // At most two adjacent bumps are nonzero at any modulation.
            const int j = dyadic_ceiling(lam).exponent();
            for (int i = std::max(0, j - 1); i <= std::min(top, j + 1); ++i) {
                const double b = bump(DyadicIndex::from_exponent(i), lam);
                if (b != 0.0) acc[static_cast<std::size_t>(i)] += b * b * e;
            }
        }
    }
    const double w = spec.parseval_weight();
    for (int i = 0; i <= top; ++i) {
        p.block_norms[DyadicIndex::from_exponent(i)] = std::sqrt(acc[static_cast<std::size_t>(i)] * w);
    }
    return p;
}

}  // namespace detail

inline ModulationProfile modulation_profile(const SpacetimeField& u) {
    return detail::modulation_profile(spacetime_transform(u), [](double) { return 1.0; });
}

/// ‖u‖_X = Σ_L L^{1/2} ‖Q_L u‖ over the resolvable L.
inline double x_norm(const SpacetimeField& u) { return modulation_profile(u).x_norm(); }

struct NormReport {
    std::map<DyadicIndex, double> x_norm_per_N;
    double low_freq_maximal = 0.0;
    double xbar_s = 0.0;
    double s = 0.0;

    /// |xbar_s² - (low² + Σ_{N>1} N^{2s} X_N²)| relative to xbar_s².
    double reconstruction_defect() const {
        double sum = low_freq_maximal * low_freq_maximal;
        for (const auto& [n, v] : x_norm_per_N) {
            if (n.exponent() > 0) sum += std::pow(n.value(), 2.0 * s) * v * v;
        }
        const double ref = xbar_s * xbar_s;
        return ref > 0.0 ? std::abs(ref - sum) / ref : std::abs(sum);
    }
};

/// ‖sup_t |v(t, x)|‖_{L²_x} over the stored samples.
inline double maximal_norm(const SpacetimeField& v) {
    double s = 0.0;
    for (std::size_t k = 0; k < v.num_points(); ++k) {
        double mx = 0.0;
        for (std::size_t j = 0; j < v.num_times(); ++j) mx = std::max(mx, std::abs(v.at(j, k)));
        s += mx * mx;
    }
    return std::sqrt(s * v.grid().dx());
}

/// X̄^s norm: maximal L_x²L_t^∞ norm of the N = 1 block plus N^{2s}-weighted
/// X norms of the blocks N > 1.
inline NormReport xbar_s_norm(const SpacetimeField& u, double s) {
    const auto spec = spacetime_transform(u);
    require_unit_band_resolved(spec);
    NormReport r;
    r.s = s;
    const auto top = top_frequency_block(u.grid());
    for (auto n = DyadicIndex::from_exponent(0); n <= top; n = n.doubled()) {
        r.x_norm_per_N[n] =
            detail::modulation_profile(spec, [n](double xi) { return bump(n, xi); }).x_norm();
    }
    SpacetimeSpectrum low = spec;
    for (std::size_t m = 0; m < low.num_times(); ++m) {
        for (std::size_t k = 0; k < low.num_points(); ++k) low.at(m, k) *= bump(DyadicIndex{}, low.xi(k));
    }
    r.low_freq_maximal = maximal_norm(inverse_spacetime_transform(low));
    double sum = r.low_freq_maximal * r.low_freq_maximal;
    for (const auto& [n, v] : r.x_norm_per_N) {
        if (n.exponent() > 0) sum += std::pow(n.value(), 2.0 * s) * v * v;
    }
    r.xbar_s = std::sqrt(sum);
    return r;
}

/// Window on which the free-evolution check samples S(t)f: [-2, 2], where
/// the taper is exactly chi(t).
struct FreeWindow {
    double t_begin = -2.0;
    double t_end = 2.0;
    std::size_t num_times = 129;
};

/// Samples S(t)f on the window.
inline SpacetimeField free_evolution(const SpectralField& f, const FreeWindow& w = {}) {
    SpacetimeField u(f.grid(), w.t_begin, w.t_end, w.num_times);
    for (std::size_t j = 0; j < w.num_times; ++j) {
        const auto v = inverse_transform(airy_propagate(f, u.time(j)));
        for (std::size_t k = 0; k < v.size(); ++k) u.at(j, k) = v[k];
    }
    return u;
}

/// ‖chi(t) S(t) f‖_{X̄^s} / ‖f‖_{H^s}.
inline double free_energy_check(const SpectralField& f, double s, const FreeWindow& w = {}) {
    const double hs = sobolev_norm(f, s);
    if (hs == 0.0) throw InvalidArgument("free_energy_check: zero data");
    return xbar_s_norm(free_evolution(f, w), s).xbar_s / hs;
}

}  // namespace kdvg

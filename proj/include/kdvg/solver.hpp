#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "kdvg/error.hpp"
#include "kdvg/fft.hpp"
#include "kdvg/spectral_core.hpp"

namespace kdvg {

/// e^{i θ} for θ = t ξ³ after reduction mod 2π.
inline cplx airy_phase(double t, double xi) {
    const double ph = std::fmod(t * xi * xi * xi, 2.0 * std::numbers::pi);
    return {std::cos(ph), std::sin(ph)};
}

/// Free Airy group: f̂(ξ) <- e^{i t ξ³} f̂(ξ).
inline SpectralField airy_propagate(const SpectralField& f, double t) {
    if (t == 0.0) return f;
    SpectralField out = f;
    auto c = out.coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) c[j] *= airy_phase(t, f.xi(j));
    return out;
}

enum class Scheme { if_rk4, etd_rk4 };

inline const char* scheme_name(Scheme s) { return s == Scheme::if_rk4 ? "ifrk4" : "etdrk4"; }

struct SolverConfig {
    double dt = 1e-4;
    Scheme scheme = Scheme::if_rk4;
    double dealias = 2.0 / 3.0;
    std::size_t record_every = 1000;
    /// Drop the nonlinearity (test mode).
    bool linear_only = false;
    bool check_boundary = true;
    double boundary_tol = 1e-10;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
        if (record_every == 0) throw InvalidArgument("record_every must be positive");
        padded_length(4, dealias);
    }
};

/// mass ∫u, momentum ∫u², hamiltonian ∫(u_x²/2 - u³/6).
struct Invariants {
    double mass = 0.0;
    double momentum = 0.0;
    double hamiltonian = 0.0;
};

inline Invariants classical_invariants(const SpectralField& f) {
    const GridSpec& g = f.grid();
    Invariants inv;
    inv.mass = f.coeffs()[0].real();
    double m = 0.0;
    double kin = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double a = std::norm(f.coeffs()[j]);
        m += a;
        if (!g.is_nyquist(j)) kin += f.xi(j) * f.xi(j) * a;
    }
    inv.momentum = m / g.length();
    const auto u = inverse_transform(f);
    double cube = 0.0;
    for (double v : u) cube += v * v * v;
    inv.hamiltonian = 0.5 * kin / g.length() - cube * g.dx() / 6.0;
    return inv;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralField> snapshots;
    std::vector<Invariants> diagnostics;

    std::size_t size() const noexcept { return times.size(); }
    const GridSpec& grid() const { return snapshots.at(0).grid(); }
};

namespace detail {

/// u_t = i ξ³ u + N(u), N(u) = -(iξ/2) (u²)^, on the half spectrum k = 0..n/2.
class KdvStepper {
public:
    KdvStepper(const GridSpec& g, const SolverConfig& cfg)
        : grid_(g), cfg_(cfg), half_(g.num_points() / 2 + 1),
          m_(padded_length(g.num_points(), cfg.dealias)), fft_(m_) {
        const double h = cfg.dt;
        xi_.resize(half_);
        nl_.resize(half_);
        e_.resize(half_);
        e2_.resize(half_);
        for (std::size_t k = 0; k < half_; ++k) {
            xi_[k] = g.xi(k);
            if (k == half_ - 1) xi_[k] = -xi_[k];  // Nyquist, zeroed anyway
            nl_[k] = (k == half_ - 1) ? cplx{} : cplx(0.0, -0.5 * xi_[k]);
            e_[k] = airy_phase(h, xi_[k]);
            e2_[k] = airy_phase(0.5 * h, xi_[k]);
        }
        if (cfg.scheme == Scheme::etd_rk4) init_etd();
        for (auto* v : {&a_, &b_, &c_, &d_, &t1_, &t2_}) v->resize(half_);
    }

    std::size_t half() const noexcept { return half_; }

    /// N(v) into out.
    void nonlinear(const std::vector<cplx>& v, std::vector<cplx>& out) {
        if (cfg_.linear_only) {
            std::fill(out.begin(), out.end(), cplx{});
            return;
        }
        const std::size_t n = grid_.num_points();
        const double inv_dx = 1.0 / grid_.dx();
        auto spec = fft_.spectrum();
        std::fill(spec.begin(), spec.end(), cplx{});
        for (std::size_t k = 0; k < n / 2; ++k) spec[k] = parity(k) * v[k] * inv_dx;
        fft_.backward();
        auto r = fft_.real();
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : r) {
            x *= inv_n;
            x *= x;
        }
        fft_.forward();
        const double scale = grid_.dx() * static_cast<double>(n) / static_cast<double>(m_);
        for (std::size_t k = 0; k < n / 2; ++k) out[k] = nl_[k] * parity(k) * scale * spec[k];
        out[n / 2] = 0.0;
    }

    void step(std::vector<cplx>& v) {
        if (cfg_.scheme == Scheme::if_rk4) {
            step_if(v);
        } else {
            step_etd(v);
        }
    }

private:
    void step_if(std::vector<cplx>& v) {
        const double h = cfg_.dt;
        nonlinear(v, a_);
        for (std::size_t k = 0; k < half_; ++k) t1_[k] = e2_[k] * (v[k] + 0.5 * h * a_[k]);
        nonlinear(t1_, b_);
        for (std::size_t k = 0; k < half_; ++k) t1_[k] = e2_[k] * v[k] + 0.5 * h * b_[k];
        nonlinear(t1_, c_);
        for (std::size_t k = 0; k < half_; ++k) t1_[k] = e_[k] * v[k] + e2_[k] * h * c_[k];
        nonlinear(t1_, d_);
        for (std::size_t k = 0; k < half_; ++k) {
            v[k] = e_[k] * v[k] +
                   (h / 6.0) * (e_[k] * a_[k] + 2.0 * e2_[k] * (b_[k] + c_[k]) + d_[k]);
        }
        v[half_ - 1] = 0.0;
    }

    void step_etd(std::vector<cplx>& v) {
        nonlinear(v, a_);
        for (std::size_t k = 0; k < half_; ++k) t1_[k] = e2_[k] * v[k] + q_[k] * a_[k];
        nonlinear(t1_, b_);
        for (std::size_t k = 0; k < half_; ++k) t2_[k] = e2_[k] * v[k] + q_[k] * b_[k];
        nonlinear(t2_, c_);
        for (std::size_t k = 0; k < half_; ++k) {
            t2_[k] = e2_[k] * t1_[k] + q_[k] * (2.0 * c_[k] - a_[k]);
        }
        nonlinear(t2_, d_);
        for (std::size_t k = 0; k < half_; ++k) {
            v[k] = e_[k] * v[k] + a_[k] * f1_[k] + 2.0 * (b_[k] + c_[k]) * f2_[k] + d_[k] * f3_[k];
        }
        v[half_ - 1] = 0.0;
    }

    /// Contour-integral ETDRK4 coefficients (32 points on the unit circle).
    void init_etd() {
        const double h = cfg_.dt;
        const int npts = 32;
        q_.resize(half_);
        f1_.resize(half_);
        f2_.resize(half_);
        f3_.resize(half_);
        for (std::size_t k = 0; k < half_; ++k) {
            const cplx lh(0.0, h * xi_[k] * xi_[k] * xi_[k]);
            cplx q = 0.0;
            cplx a = 0.0;
            cplx b = 0.0;
            cplx c = 0.0;
            for (int j = 0; j < npts; ++j) {
                const double th = 2.0 * std::numbers::pi * (j + 0.5) / npts;
                const cplx r = lh + std::polar(1.0, th);
                const cplx er = std::exp(r);
                const cplx r3 = r * r * r;
                q += (std::exp(0.5 * r) - 1.0) / r;
                a += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
                b += (2.0 + r + er * (r - 2.0)) / r3;
                c += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
            }
            q_[k] = h * q / static_cast<double>(npts);
            f1_[k] = h * a / static_cast<double>(npts);
            f2_[k] = h * b / static_cast<double>(npts);
            f3_[k] = h * c / static_cast<double>(npts);
        }
    }

    GridSpec grid_;
    SolverConfig cfg_;
    std::size_t half_;
    std::size_t m_;
    RealFft fft_;
    std::vector<double> xi_;
    std::vector<cplx> nl_, e_, e2_, q_, f1_, f2_, f3_;
    std::vector<cplx> a_, b_, c_, d_, t1_, t2_;
};

inline SpectralField from_half(const GridSpec& g, const std::vector<cplx>& v) {
    const std::size_t n = g.num_points();
    std::vector<cplx> c(n);
    for (std::size_t k = 0; k <= n / 2; ++k) c[k] = v[k];
    c[0] = c[0].real();
    c[n / 2] = 0.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) c[k] = std::conj(c[n - k]);
    return SpectralField(g, std::move(c));
}

}  // namespace detail

/// Integrates u_t + u_xxx + u u_x = 0 from f over [0, T].
///
/// The step is adjusted down so that a whole number of steps lands on T.
/// Snapshots are recorded at t = 0, every record_every steps, and at T; the
/// boundary-smallness check runs on each of them.
inline Trajectory evolve(const SpectralField& f, double T, SolverConfig cfg) {
    cfg.validate();
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("evolve: T must be positive");
    if (hermitian_defect(f) > 1e-10) throw InvalidArgument("evolve: initial data is not real");
    const GridSpec& g = f.grid();

    auto steps = static_cast<std::size_t>(std::llround(T / cfg.dt));
    if (steps == 0 || std::abs(static_cast<double>(steps) * cfg.dt - T) > 1e-9 * T) {
        steps = static_cast<std::size_t>(std::ceil(T / cfg.dt - 1e-9));
    }
    cfg.dt = T / static_cast<double>(steps);

    detail::KdvStepper stepper(g, cfg);
    std::vector<cplx> v(f.coeffs().begin(), f.coeffs().begin() + static_cast<long>(stepper.half()));
    v[0] = v[0].real();
    v.back() = 0.0;

    Trajectory traj;
    double last_valid = 0.0;
    auto record = [&](double t) {
        SpectralField s = detail::from_half(g, v);
        if (cfg.check_boundary) check_boundary(inverse_transform(s), t, cfg.boundary_tol);
        traj.times.push_back(t);
        traj.diagnostics.push_back(classical_invariants(s));
        traj.snapshots.push_back(std::move(s));
    };
    auto all_finite = [&] {
        for (const auto& c : v) {
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
        }
        return true;
    };

    record(0.0);
    for (std::size_t i = 1; i <= steps; ++i) {
        stepper.step(v);
        const double t = static_cast<double>(i) * cfg.dt;
        const bool at_record = (i % cfg.record_every == 0) || i == steps;
        if (at_record || i % 100 == 0) {
            if (!all_finite()) {
                throw SolverDiverged("solver diverged after t = " + std::to_string(last_valid),
                                     last_valid);
            }
            last_valid = t;
        }
        if (at_record) record(i == steps ? T : t);
    }
    return traj;
}

/// x -> -x reflection of a real field (f̂(ξ) -> f̂(-ξ) = conj f̂(ξ)).
inline SpectralField reflect(const SpectralField& f) {
    SpectralField out = f;
    for (auto& c : out.coeffs()) c = std::conj(c);
    const std::size_t n = f.size();
    out.coeffs()[n / 2] = f.coeffs()[n / 2];
    return out;
}

}  // namespace kdvg

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/sobol.hpp>

#include "kdvg/cutoff.hpp"
#include "kdvg/error.hpp"
#include "kdvg/fft.hpp"
#include "kdvg/power_law.hpp"
#include "kdvg/spacetime.hpp"

namespace kdvg {

enum class Regime { prop_a, prop_b, prop_c };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::prop_a: return "prop-a";
        case Regime::prop_b: return "prop-b";
        case Regime::prop_c: return "prop-c";
    }
    return "?";
}

/// a ∼ b: within a factor of 4 either way.
inline bool comparable(double a, double b) { return a <= 4.0 * b && b <= 4.0 * a; }

struct DyadicTriple {
    std::array<DyadicIndex, 3> N;
    std::array<DyadicIndex, 3> L;
    Regime regime = Regime::prop_c;

    DyadicTriple(DyadicIndex n1, DyadicIndex n2, DyadicIndex n3, DyadicIndex l1, DyadicIndex l2,
                 DyadicIndex l3);

    /// From values; each must be a power of two >= 1.
    static DyadicTriple of(double n1, double n2, double n3, double l1, double l2, double l3) {
        auto d = [](double v) {
            const auto i = DyadicIndex::from_value(v);
            if (!i.inhomogeneous()) throw InvalidArgument("dyadic triple entries must be >= 1");
            return i;
        };
        return DyadicTriple(d(n1), d(n2), d(n3), d(l1), d(l2), d(l3));
    }

    double n(int j) const { return N[static_cast<std::size_t>(j)].value(); }
    double l(int j) const { return L[static_cast<std::size_t>(j)].value(); }
    double n_min() const { return std::min({n(0), n(1), n(2)}); }
    double n_max() const { return std::max({n(0), n(1), n(2)}); }
    double n_med() const { return n(0) + n(1) + n(2) - n_min() - n_max(); }
    double l_min() const { return std::min({l(0), l(1), l(2)}); }
    double l_max() const { return std::max({l(0), l(1), l(2)}); }
    double l_med() const { return l(0) + l(1) + l(2) - l_min() - l_max(); }
    /// N_min N_max², the size of the resonance function.
    double resonance() const { return n_min() * n_max() * n_max(); }

    bool ncompare() const { return comparable(n_max(), n_med()); }
    bool lmaxmed() const { return comparable(l_max(), std::max(resonance(), l_med())); }
    bool supported() const { return ncompare() && lmaxmed(); }
};

inline Regime classify(const DyadicTriple& t) {
    if (comparable(t.n_max(), t.n_min()) && comparable(t.l_max(), t.resonance())) return Regime::prop_a;
    if (t.n_max() > 4.0 * t.n_min()) {
        for (int j = 0; j < 3; ++j) {
            if (t.n(j) != t.n_min() || !comparable(t.l(j), t.resonance())) continue;
            bool dominates = true;
            for (int i = 0; i < 3; ++i) dominates = dominates && (i == j || t.l(j) >= t.l(i) / 4.0);
            if (dominates) return Regime::prop_b;
        }
    }
    return Regime::prop_c;
}

inline DyadicTriple::DyadicTriple(DyadicIndex n1, DyadicIndex n2, DyadicIndex n3, DyadicIndex l1,
                                  DyadicIndex l2, DyadicIndex l3)
    : N{n1, n2, n3}, L{l1, l2, l3} {
    regime = classify(*this);
}

/// C(N, L) for the triple's regime, normalization constant 1.
inline double predicted_constant(const DyadicTriple& t) {
    if (!t.supported()) {
        throw VanishingConfiguration("vanishing configuration: " +
                                     std::string(t.ncompare() ? "L_max not comparable to max(N_min N_max^2, L_med)"
                                                              : "N_max not comparable to N_med"));
    }
    const double lmin = std::sqrt(t.l_min());
    switch (t.regime) {
        case Regime::prop_a:
            return std::pow(t.n_max(), -0.25) * lmin * std::pow(t.l_med(), 0.25);
        case Regime::prop_b:
            return lmin / t.n_max() *
                   std::sqrt(std::min(t.resonance(), t.n_max() / t.n_min() * t.l_med()));
        case Regime::prop_c:
            return lmin / t.n_max() * std::sqrt(std::min(t.resonance(), t.l_med()));
    }
    return 0.0;
}

/// Separable packet with space-time transform A(ξ) Φ(τ - ξ³).
///
/// A = amplitude · β_N(ξ) · χ(2(ξ-c)/δ) · exp(Σ a_m cos(mπ(ξ-c)/δ + φ_m)),
/// restricted to the sign of c when N > 1; Φ = β_L(λ) exp(Σ b_m cos(mπλ/2L + ψ_m)).
struct Packet {
    DyadicIndex N;
    DyadicIndex L;
    double centre = 1.0;
    double width = 1.0;
    double amplitude = 1.0;
    std::array<double, 3> xi_amp{};
    std::array<double, 3> xi_phase{};
    std::array<double, 3> mod_amp{};
    std::array<double, 3> mod_phase{};

    void validate() const {
        if (!N.inhomogeneous() || !L.inhomogeneous()) throw InvalidArgument("packet needs N, L >= 1");
        if (!(width > 0.0) || !std::isfinite(centre) || !std::isfinite(amplitude)) {
            throw InvalidArgument("packet needs a positive width and finite centre");
        }
        const auto [a, b] = xi_support();
        if (!(b > a)) throw InvalidArgument("packet centre/width miss the frequency band");
    }

    double band_lo() const { return N.exponent() == 0 ? -2.0 : (centre >= 0.0 ? 0.5 * N.value() : -2.0 * N.value()); }
    double band_hi() const { return N.exponent() == 0 ? 2.0 : (centre >= 0.0 ? 2.0 * N.value() : -0.5 * N.value()); }

    std::pair<double, double> xi_support() const {
        return {std::max(band_lo(), centre - width), std::min(band_hi(), centre + width)};
    }
    /// Φ vanishes outside |λ| < 2L.
    double mod_radius() const { return 2.0 * L.value(); }

    double spectrum(double xi) const {
        if (xi <= band_lo() || xi >= band_hi()) return 0.0;
        const double y = (xi - centre) / width;
        const double e = chi(2.0 * y);
        if (e == 0.0) return 0.0;
        double s = 0.0;
        for (int m = 0; m < 3; ++m) s += xi_amp[m] * std::cos((m + 1) * std::numbers::pi * y + xi_phase[m]);
        return amplitude * bump(N, xi) * e * std::exp(s);
    }

    double profile(double lam) const {
        const double b = bump(L, lam);
        if (b == 0.0) return 0.0;
        const double y = lam / L.value();
        double s = 0.0;
        for (int m = 0; m < 3; ++m) s += mod_amp[m] * std::cos((m + 1) * 0.5 * std::numbers::pi * y + mod_phase[m]);
        return b * std::exp(s);
    }

    /// A(-ξ): the same packet at negative frequencies.
    Packet mirrored() const {
        Packet p = *this;
        p.centre = -centre;
        for (auto& f : p.xi_phase) f = -f;
        return p;
    }
};

/// Random envelope parameters a_m, b_m ~ U(-0.3, 0.3), phases ~ U(0, 2π).
template <typename Rng>
void randomize_envelope(Packet& p, Rng& rng) {
    std::uniform_real_distribution<double> amp(-0.3, 0.3);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    for (int m = 0; m < 3; ++m) {
        p.xi_amp[m] = amp(rng);
        p.xi_phase[m] = ph(rng);
        p.mod_amp[m] = amp(rng);
        p.mod_phase[m] = ph(rng);
    }
}

/// Full-band packet: centre 1.25N, width 0.75N, envelope from `seed`.
inline Packet default_packet(DyadicIndex N, DyadicIndex L, std::uint64_t seed) {
    Packet p;
    p.N = N;
    p.L = L;
    p.centre = 1.25 * N.value();
    p.width = 0.75 * N.value();
    std::mt19937_64 rng(seed);
    randomize_envelope(p, rng);
    p.validate();
    return p;
}

struct QuadratureTolerance {
    double inner = 1e-5;
    double middle = 1e-4;
    double outer = 1e-3;
    unsigned depth = 10;
};

namespace detail {

/// Cubic B-spline interpolant on uniform nodes, stored as one cubic per
/// cell for cheap evaluation. Boost builds the spline; each cell is
/// recovered exactly from four of its values.
class Spline {
public:
    Spline() = default;
    Spline(const std::vector<double>& v, double lo, double h) : lo_(lo), inv_h_(1.0 / h) {
        const boost::math::interpolators::cardinal_cubic_b_spline<double> b(v.data(), v.size(), lo, h, 0.0, 0.0);
        const std::size_t cells = v.size() - 1;
        c_.resize(4 * cells);
        for (std::size_t i = 0; i < cells; ++i) {
            const double x0 = lo + h * static_cast<double>(i);
            const double y0 = v[i], y1 = b(x0 + h / 3.0), y2 = b(x0 + 2.0 * h / 3.0), y3 = v[i + 1];
            // Monomial coefficients in t = (x - x0)/h from samples at t = 0, 1/3, 2/3, 1.
            c_[4 * i] = y0;
            c_[4 * i + 1] = (-11.0 * y0 + 18.0 * y1 - 9.0 * y2 + 2.0 * y3) / 2.0;
            c_[4 * i + 2] = 9.0 * (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3) / 2.0;
            c_[4 * i + 3] = 9.0 * (-y0 + 3.0 * y1 - 3.0 * y2 + y3) / 2.0;
        }
    }

    double operator()(double x) const {
        const double u = (x - lo_) * inv_h_;
        const std::size_t cells = c_.size() / 4;
        const auto i = std::min(static_cast<std::size_t>(std::max(u, 0.0)), cells - 1);
        const double t = u - static_cast<double>(i);
        const double* c = &c_[4 * i];
        return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    }

private:
    double lo_ = 0.0, inv_h_ = 1.0;
    std::vector<double> c_;
};
using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Tabulated A and Φ for fast evaluation inside nested quadrature.
class PacketTable {
public:
    explicit PacketTable(const Packet& p, std::size_t nodes = 1025) : packet_(p) {
        p.validate();
        std::tie(a_, b_) = p.xi_support();
        a_spline_ = tabulate([&](double x) { return p.spectrum(x); }, a_, b_, nodes);
        r_ = p.mod_radius();
        phi_spline_ = tabulate([&](double x) { return p.profile(x); }, -r_, r_, 2 * nodes - 1);
        for (std::size_t i = 0; i < nodes; ++i) {
            a_max_ = std::max(a_max_, std::abs(p.spectrum(a_ + (b_ - a_) * static_cast<double>(i) / static_cast<double>(nodes - 1))));
        }
    }

    const Packet& packet() const noexcept { return packet_; }
    double lo() const noexcept { return a_; }
    double hi() const noexcept { return b_; }
    double radius() const noexcept { return r_; }
    double a_max() const noexcept { return a_max_; }

    double A(double xi) const { return xi <= a_ || xi >= b_ ? 0.0 : a_spline_(xi); }
    double Phi(double lam) const { return std::abs(lam) >= r_ ? 0.0 : phi_spline_(lam); }

    template <typename F>
    static Spline tabulate(F&& f, double lo, double hi, std::size_t nodes) {
        std::vector<double> v(nodes);
        const double h = (hi - lo) / static_cast<double>(nodes - 1);
        for (std::size_t i = 0; i < nodes; ++i) v[i] = f(lo + h * static_cast<double>(i));
        return Spline(v, lo, h);
    }

private:
    Packet packet_;
    double a_ = 0.0, b_ = 0.0, r_ = 0.0, a_max_ = 0.0;
    Spline a_spline_;
    Spline phi_spline_;
};

/// Adaptive Gauss–Kronrod over consecutive breakpoints inside [a, b].
///
/// A first pass over the pieces fixes the scale l1 = ∫|f|. Then the piece
/// with the largest error estimate is bisected until the summed estimate
/// of the pieces still open drops below max(rel · l1, abs_floor(l1)).
/// A piece split `depth` times is closed.
template <typename F, typename Floor>
double integrate_pieces_floor(F&& f, std::vector<double> cuts, double a, double b, double rel, unsigned depth,
                              Floor&& abs_floor) {
    if (!(b > a)) return 0.0;
    cuts.push_back(a);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    struct Piece {
        double lo, hi, v, err;
        unsigned level;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    std::vector<Piece> heap, done;
    double prev = a, l1 = 0.0, err_sum = 0.0;
    for (double c : cuts) {
        if (c <= prev) continue;
        if (c > b) break;
        double err = 0.0, abs_v = 0.0;
        const double v = GK::integrate(f, prev, c, 0, 0.0, &err, &abs_v);
        heap.push_back({prev, c, v, err, 0});
        l1 += abs_v;
        err_sum += err;
        prev = c;
    }
    std::make_heap(heap.begin(), heap.end());
    const double target = std::max(rel * l1, abs_floor(l1));
    while (!heap.empty() && err_sum > target) {
        std::pop_heap(heap.begin(), heap.end());
        const Piece p = heap.back();
        heap.pop_back();
        // Accepted as is: its error no longer counts against the target.
        if (p.level >= depth) {
            done.push_back(p);
            err_sum -= p.err;
            continue;
        }
        const double m = 0.5 * (p.lo + p.hi);
        for (const auto& [lo, hi] : {std::pair{p.lo, m}, std::pair{m, p.hi}}) {
            double err = 0.0;
            const double v = GK::integrate(f, lo, hi, 0, 0.0, &err);
            heap.push_back({lo, hi, v, err, p.level + 1});
            std::push_heap(heap.begin(), heap.end());
            err_sum += err;
        }
        err_sum -= p.err;
    }
    double s = 0.0;
    for (const auto& p : heap) s += p.v;
    for (const auto& p : done) s += p.v;
    return s;
}

template <typename F>
double integrate_pieces(F&& f, std::vector<double> cuts, double a, double b, double rel, unsigned depth,
                        double abs_density = 0.0) {
    return integrate_pieces_floor(f, std::move(cuts), a, b, rel, depth,
                                  [&](double) { return abs_density * (b - a); });
}

template <typename F>
double integrate(F&& f, double a, double b, double rel, unsigned depth, double abs_density = 0.0) {
    return integrate_pieces(f, {}, a, b, rel, depth, abs_density);
}

/// Real roots of a x² + b x + c = 0.
inline void quadratic_roots(double a, double b, double c, std::vector<double>& out) {
    if (a == 0.0) {
        if (b != 0.0) out.push_back(-c / b);
        return;
    }
    const double d = b * b - 4.0 * a * c;
    if (d < 0.0) return;
    const double q = -0.5 * (b + std::copysign(std::sqrt(d), b));
    if (q != 0.0) out.push_back(c / q);
    out.push_back(q / a);
}

/// Product of two packets: W(λ₃, ξ₃) = ∫ A₁(ξ₁) A₂(ξ₃-ξ₁) Ψ(λ₃ + 3ξ₁ξ₂ξ₃) dξ₁, Ψ = Φ₁ * Φ₂.
///
/// (u₁u₂)~(τ, ξ) = (2π)⁻² W(τ - ξ³, ξ).
class PairKernel {
public:
    PairKernel(const PacketTable& t1, const PacketTable& t2, QuadratureTolerance tol = {},
               std::size_t psi_nodes = 2049, std::size_t conv_nodes = 512)
        : t1_(t1), t2_(t2), tol_(tol) {
        s_ = t1.radius() + t2.radius();
        const PacketTable& small = t1.radius() <= t2.radius() ? t1 : t2;
        const PacketTable& big = t1.radius() <= t2.radius() ? t2 : t1;
        const double r = small.radius();
        const double h = 2.0 * r / static_cast<double>(conv_nodes);
        std::vector<double> lam(conv_nodes - 1), w(conv_nodes - 1);
        for (std::size_t j = 1; j < conv_nodes; ++j) {
            lam[j - 1] = -r + h * static_cast<double>(j);
            w[j - 1] = h * small.packet().profile(lam[j - 1]);
        }
        psi_ = PacketTable::tabulate(
            [&](double s) {
                double acc = 0.0;
                for (std::size_t j = 0; j < lam.size(); ++j) {
                    if (w[j] != 0.0) acc += w[j] * big.Phi(s - lam[j]);
                }
                return acc;
            },
            -s_, s_, psi_nodes);
        double psi_max = 0.0;
        for (std::size_t i = 0; i < psi_nodes; ++i) {
            psi_max = std::max(psi_max, std::abs(psi_(-s_ + 2.0 * s_ * static_cast<double>(i) / static_cast<double>(psi_nodes - 1))));
        }
        // Upper bounds for |A₁A₂Ψ| and |W|; quadrature floors are relative to these.
        f_scale_ = t1.a_max() * t2.a_max() * psi_max;
        w_scale_ = f_scale_ * std::min(t1.hi() - t1.lo(), t2.hi() - t2.lo());
    }

    /// Half-width of supp Ψ.
    double spread() const noexcept { return s_; }
    double Psi(double s) const { return std::abs(s) >= s_ ? 0.0 : psi_(s); }

    /// ξ₁ range where both A₁(ξ₁) and A₂(ξ₃ - ξ₁) can be nonzero.
    std::pair<double, double> xi1_range(double xi3) const {
        return {std::max(t1_.lo(), xi3 - t2_.hi()), std::min(t1_.hi(), xi3 - t2_.lo())};
    }

    double xi3_lo() const { return t1_.lo() + t2_.lo(); }
    double xi3_hi() const { return t1_.hi() + t2_.hi(); }

    static double resonance(double xi1, double xi3) { return 3.0 * xi1 * (xi3 - xi1) * xi3; }

    /// Range of the resonance function over the ξ₁ range at fixed ξ₃.
    std::pair<double, double> resonance_range(double xi3) const {
        const auto [a, b] = xi1_range(xi3);
        if (!(b > a)) return {1.0, -1.0};
        double lo = std::min(resonance(a, xi3), resonance(b, xi3));
        double hi = std::max(resonance(a, xi3), resonance(b, xi3));
        if (0.5 * xi3 > a && 0.5 * xi3 < b) {
            const double v = resonance(0.5 * xi3, xi3);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return {lo, hi};
    }

    double W(double lam3, double xi3) const {
        const auto [a, b] = xi1_range(xi3);
        if (!(b > a)) return 0.0;
        auto f = [&](double x1) { return t1_.A(x1) * t2_.A(xi3 - x1) * Psi(lam3 + resonance(x1, xi3)); };
        const double kappa = 3.0 * xi3;
        if (kappa == 0.0) return std::abs(lam3) < s_ ? integrate(f, a, b, tol_.inner, tol_.depth, tol_.inner * f_scale_) : 0.0;
        // R = R_v - κη² with η = ξ₁ - ξ₃/2; keep |λ₃ + R| < S.
        const double rv = 0.75 * xi3 * xi3 * xi3;
        double q_lo = (rv + lam3 - s_) / kappa;
        double q_hi = (rv + lam3 + s_) / kappa;
        if (kappa < 0.0) std::swap(q_lo, q_hi);
        if (q_hi <= 0.0) return 0.0;
        const double e_lo = std::sqrt(std::max(q_lo, 0.0));
        const double e_hi = std::sqrt(q_hi);
        const double c = 0.5 * xi3;
        if (e_lo == 0.0) return integrate(f, std::max(a, c - e_hi), std::min(b, c + e_hi), tol_.inner, tol_.depth, tol_.inner * f_scale_);
        return integrate(f, std::max(a, c - e_hi), std::min(b, c - e_lo), tol_.inner, tol_.depth, tol_.inner * f_scale_) +
               integrate(f, std::max(a, c + e_lo), std::min(b, c + e_hi), tol_.inner, tol_.depth, tol_.inner * f_scale_);
    }

    /// ∫ weight(λ₃) W(λ₃, ξ₃)² dλ₃ over [lam_lo, lam_hi].
    template <typename Weight>
    double modulation_integral(double xi3, double lam_lo, double lam_hi, Weight&& weight) const {
        const auto [rlo, rhi] = resonance_range(xi3);
        if (!(rhi >= rlo)) return 0.0;
        const double lo = std::max(lam_lo, -rhi - s_);
        const double hi = std::min(lam_hi, -rlo + s_);
        std::vector<double> cuts{-resonance(0.5 * xi3, xi3), -rhi + s_, -rlo - s_};
        auto g = [&](double lam) {
            const double w = weight(lam);
            if (w == 0.0) return 0.0;
            const double v = W(lam, xi3);
            return w * v * v;
        };
        return integrate_pieces(g, cuts, lo, hi, tol_.middle, tol_.depth, tol_.middle * w_scale_ * w_scale_);
    }

    /// ξ₃ values where the support of ξ₃ ↦ modulation_integral over a
    /// λ₃ window can begin, end or change shape.
    std::vector<double> xi3_breakpoints(double lam_lo, double lam_hi) const {
        std::vector<double> out{0.0, t1_.lo() + t2_.hi(), t1_.hi() + t2_.lo(),
                                2.0 * t1_.lo(), 2.0 * t1_.hi(), 2.0 * t2_.lo(), 2.0 * t2_.hi()};
        for (double r : {-lam_hi - s_, -lam_lo + s_, -lam_hi, -lam_lo}) {
            // Level curves R = r meet the edges ξ₁ = e or ξ₂ = e: 3eξ₃² - 3e²ξ₃ - r = 0.
            for (double e : {t1_.lo(), t1_.hi(), t2_.lo(), t2_.hi()}) quadratic_roots(3.0 * e, -3.0 * e * e, -r, out);
            // Tangency with ξ₃ = const happens on the vertex curve R = 3ξ₃³/4.
            out.push_back(std::cbrt(4.0 * r / 3.0));
        }
        return out;
    }

    /// ∫ xi_weight(ξ₃) ∫ lam_weight(λ₃) W² dλ₃ dξ₃ with λ₃ in [lam_lo, lam_hi].
    /// `abs_floor(l1)` is an absolute error allowance for the ξ₃ integral.
    template <typename XiWeight, typename LamWeight, typename Floor = double (*)(double)>
    double norm_integral(double xi_lo, double xi_hi, XiWeight&& xi_weight, double lam_lo, double lam_hi,
                         LamWeight&& lam_weight, Floor&& abs_floor = [](double) { return 0.0; }) const {
        const double a = std::max(xi_lo, xi3_lo());
        const double b = std::min(xi_hi, xi3_hi());
        if (!(b > a)) return 0.0;
        auto f = [&](double xi3) {
            const double w = xi_weight(xi3);
            if (w == 0.0) return 0.0;
            return w * modulation_integral(xi3, lam_lo, lam_hi, lam_weight);
        };
        return integrate_pieces_floor(f, xi3_breakpoints(lam_lo, lam_hi), a, b, tol_.outer, tol_.depth, abs_floor);
    }

private:
    const PacketTable& t1_;
    const PacketTable& t2_;
    QuadratureTolerance tol_;
    double s_ = 0.0;
    double f_scale_ = 0.0;
    double w_scale_ = 0.0;
    Spline psi_;
};

/// Signed λ windows covering supp β_L: one for L = 1, two otherwise.
inline std::vector<std::pair<double, double>> modulation_windows(DyadicIndex l) {
    const double v = l.value();
    if (l.exponent() == 0) return {{-2.0, 2.0}};
    return {{-2.0 * v, -0.5 * v}, {0.5 * v, 2.0 * v}};
}

/// ξ windows covering supp β_N.
inline std::vector<std::pair<double, double>> frequency_windows(DyadicIndex n) {
    return modulation_windows(n);
}

inline double spectrum_energy(const PacketTable& t, const QuadratureTolerance& tol) {
    return integrate([&](double x) { const double v = t.A(x); return v * v; }, t.lo(), t.hi(), tol.outer, tol.depth);
}

inline double profile_energy(const PacketTable& t, DyadicIndex l, const QuadratureTolerance& tol) {
    double s = 0.0;
    for (const auto& [lo, hi] : modulation_windows(l)) {
        s += integrate(
            [&](double lam) {
                const double v = bump(l, lam) * t.Phi(lam);
                return v * v;
            },
            std::max(lo, -t.radius()), std::min(hi, t.radius()), tol.outer, tol.depth);
    }
    return s;
}

}  // namespace detail

/// ‖u‖ for the packet, (2π)⁻¹ (∫A² ∫Φ²)^{1/2}.
inline double packet_l2_norm(const Packet& p, const QuadratureTolerance& tol = {}) {
    const detail::PacketTable t(p);
    const double ea = detail::spectrum_energy(t, tol);
    const double ep = detail::integrate([&](double l) { const double v = t.Phi(l); return v * v; },
                                        -t.radius(), t.radius(), tol.outer, tol.depth);
    return std::sqrt(ea * ep) / detail::two_pi;
}

/// ‖u‖_X = Σ_L L^{1/2} ‖Q_L u‖ for the packet.
inline double packet_x_norm(const Packet& p, const QuadratureTolerance& tol = {}) {
    const detail::PacketTable t(p);
    const double ea = detail::spectrum_energy(t, tol);
    double s = 0.0;
    for (int j = 0; std::ldexp(0.5, j) < t.radius(); ++j) {
        const auto l = DyadicIndex::from_exponent(j);
        s += std::sqrt(l.value() * detail::profile_energy(t, l, tol) * ea);
    }
    return s / detail::two_pi;
}

/// ‖P_{N₃} Q_{L₃} (u₁ u₂)‖ for two packets.
inline double localized_product_norm(const Packet& p1, const Packet& p2, DyadicIndex n3, DyadicIndex l3,
                                     const QuadratureTolerance& tol = {}) {
    if (p1.amplitude == 0.0 || p2.amplitude == 0.0) return 0.0;
    const detail::PacketTable t1(p1), t2(p2);
    const detail::PairKernel k(t1, t2, tol);
    double s = 0.0;
    for (const auto& [xlo, xhi] : detail::frequency_windows(n3)) {
        for (const auto& [llo, lhi] : detail::modulation_windows(l3)) {
            s += k.norm_integral(
                xlo, xhi, [&](double x) { const double b = bump(n3, x); return b * b; }, llo, lhi,
                [&](double l) { const double b = bump(l3, l); return b * b; });
        }
    }
    return std::sqrt(s) / std::pow(detail::two_pi, 3);
}

/// ‖Λ⁻¹ P_{N₃} ∂ₓ(u₁ u₂)‖_X, Λ⁻¹ the multiplier 1/(i + τ - ξ³).
inline double lemma34_lhs(const Packet& p1, const Packet& p2, DyadicIndex n3, const QuadratureTolerance& tol = {}) {
    if (p1.amplitude == 0.0 || p2.amplitude == 0.0) return 0.0;
    const detail::PacketTable t1(p1), t2(p2);
    const detail::PairKernel k(t1, t2, tol);
    // Largest |λ₃| reached: |R| <= 3 max|ξ₁| max|ξ₂| max|ξ₃|, plus the spread.
    const double x1 = std::max(std::abs(t1.lo()), std::abs(t1.hi()));
    const double x2 = std::max(std::abs(t2.lo()), std::abs(t2.hi()));
    const double lam_top = 3.0 * x1 * x2 * (x1 + x2) + k.spread();
    int levels = 0;
    while (std::ldexp(0.5, levels) < lam_top) ++levels;
    // Top level first: an error δ in s_L moves √(L s_L) by about √L δ / (2√s_L),
    // so lower levels only need accuracy relative to the running total.
    double total = 0.0;
    for (int j = levels - 1; j >= 0; --j) {
        const auto l = DyadicIndex::from_exponent(j);
        const auto windows = detail::modulation_windows(l);
        const double share = tol.outer * total / (static_cast<double>(levels * windows.size()) * std::sqrt(l.value()));
        auto floor = [&](double l1) { return 2.0 * share * std::sqrt(l1); };
        double s = 0.0;
        for (const auto& [xlo, xhi] : detail::frequency_windows(n3)) {
            for (const auto& [llo, lhi] : windows) {
                s += k.norm_integral(
                    xlo, xhi, [&](double x) { const double b = bump(n3, x); return b * b * x * x; }, llo, lhi,
                    [&](double lam) { const double b = bump(l, lam); return b * b / (1.0 + lam * lam); }, floor);
            }
        }
        total += std::sqrt(l.value() * s);
    }
    return total / std::pow(detail::two_pi, 3);
}

/// LHS / (‖u₁‖_X ‖u₂‖_X); 0 when either packet vanishes.
inline double lemma34_ratio(const Packet& p1, const Packet& p2, DyadicIndex n3, const QuadratureTolerance& tol = {}) {
    const double lhs = lemma34_lhs(p1, p2, n3, tol);
    if (lhs == 0.0) return 0.0;
    return lhs / (packet_x_norm(p1, tol) * packet_x_norm(p2, tol));
}

namespace detail {

/// Low-discrepancy trial points with a per-seed Cranley–Patterson shift.
///
/// Trial t always maps to the same packets, so a larger trial budget
/// contains every smaller one.
class TrialSequence {
public:
    static constexpr unsigned dims = 6;

    explicit TrialSequence(std::uint64_t seed) : sobol_(dims) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& s : shift_) s = u(rng);
    }

    std::array<double, dims> next() {
        std::array<double, dims> p{};
        const double scale = static_cast<double>(sobol_.max()) + 1.0;
        for (unsigned d = 0; d < dims; ++d) {
            const double v = static_cast<double>(sobol_()) / scale + shift_[d];
            p[d] = v - std::floor(v);
        }
        return p;
    }

private:
    boost::random::sobol sobol_;
    std::array<double, dims> shift_{};
};

/// Width exponents p in δ = κ N^p.
inline constexpr std::array<double, 7> width_exponents{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0};

/// Width δ = κ N^p with p from width_exponents and κ log-uniform in
/// [1/4, 4]; centre uniform in the band. A trial is the same rescaled
/// configuration at every N.
inline Packet trial_packet(DyadicIndex n, DyadicIndex l, double u_exponent, double u_kappa, double u_centre) {
    Packet p;
    p.N = n;
    p.L = l;
    const double nv = n.value();
    const auto i = std::min(width_exponents.size() - 1, static_cast<std::size_t>(u_exponent * width_exponents.size()));
    p.width = 0.25 * std::pow(16.0, u_kappa) * std::pow(nv, width_exponents[i]);
    p.centre = n.exponent() == 0 ? 2.0 * u_centre : nv * (0.5 + 1.5 * u_centre);
    return p;
}

inline bool band_overlap(double lo, double hi, DyadicIndex n) {
    for (const auto& [a, b] : frequency_windows(n)) {
        if (std::max(lo, a) < std::min(hi, b)) return true;
    }
    return false;
}

struct TrialPair {
    Packet p1;
    Packet p2;
    /// u₂ is u₁ or its mirror image.
    bool coincident = false;
    bool flipped = false;
};

/// Packets for one trial. Equal bands use coincident packets on even
/// trials; the sign of u₂ is chosen so that ξ₁ + ξ₂ can reach the N₃ band.
inline TrialPair trial_pair(DyadicIndex n1, DyadicIndex l1, DyadicIndex n2, DyadicIndex l2,
                                            DyadicIndex n3, const std::array<double, 6>& u,
                                            std::uint64_t seed, std::size_t trial) {
    std::seed_seq ss{seed, static_cast<std::uint64_t>(trial), std::uint64_t{0x6b6476}};
    std::mt19937_64 rng(ss);
    Packet p1 = trial_packet(n1, l1, u[0], u[1], u[2]);
    randomize_envelope(p1, rng);
    Packet p2;
    const bool coincident = n1 == n2 && l1 == l2 && trial % 2 == 0;
    if (coincident) {
        p2 = p1;
    } else {
        p2 = trial_packet(n2, l2, u[3], u[4], u[5]);
        randomize_envelope(p2, rng);
    }
    const auto [a1, b1] = p1.xi_support();
    const auto [a2, b2] = p2.xi_support();
    const bool same = band_overlap(a1 + a2, b1 + b2, n3);
    const bool opposite = band_overlap(a1 - b2, b1 - a2, n3);
    bool flip = !same && opposite;
    if (same && opposite) flip = std::bernoulli_distribution(0.5)(rng);
    if (flip) p2 = p2.mirrored();
    return {p1, p2, coincident, flip};
}

/// Moves the centres and log-widths of a pair, keeping signs, envelopes
/// and coincidence. Returns false when a packet would leave its band.
inline bool shift_pair(TrialPair& t, int coord, double step) {
    auto move = [&](Packet& p) {
        if (coord % 2 == 0) {
            p.width *= std::exp(step);
        } else {
            p.centre += p.centre < 0.0 ? -step : step;
        }
    };
    if (t.coincident) {
        if (coord > 1) return false;
        move(t.p1);
        t.p2 = t.flipped ? t.p1.mirrored() : t.p1;
    } else {
        move(coord < 2 ? t.p1 : t.p2);
    }
    for (const Packet* p : {&t.p1, &t.p2}) {
        const auto [a, b] = p->xi_support();
        if (!(b > a) || p->centre <= p->band_lo() || p->centre >= p->band_hi()) return false;
    }
    return true;
}

/// Compass search on (log δ₁, c₁, log δ₂, c₂) from a trial; a lower
/// estimate like the trial itself.
template <typename Objective>
double pattern_search(TrialPair start, double value, Objective&& f, int budget) {
    std::array<double, 4> step{0.7, 0.15 * start.p1.N.value(), 0.7, 0.15 * start.p2.N.value()};
    int evals = 0;
    while (evals < budget) {
        bool improved = false;
        for (int c = 0; c < 4 && evals < budget; ++c) {
            for (double dir : {1.0, -1.0}) {
                TrialPair cand = start;
                if (!shift_pair(cand, c, dir * step[static_cast<std::size_t>(c)])) continue;
                ++evals;
                const double v = f(cand.p1, cand.p2);
                if (v > value) {
                    value = v;
                    start = cand;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            for (auto& st : step) st *= 0.5;
            if (step[0] < 0.05) break;
        }
    }
    return value;
}

/// Max over trials, followed by pattern searches from the best few trials
/// of every dyadic prefix 4, 8, 16, ... of the trial set. Prefixes of a
/// smaller set are prefixes of a larger one, so the result never
/// decreases when trials are added.
template <typename Objective>
double search_trials(const std::vector<TrialPair>& pairs, Objective&& f, int budget, std::size_t starts_per_prefix = 3) {
    std::vector<double> vals;
    for (const auto& t : pairs) vals.push_back(f(t.p1, t.p2));
    double best = 0.0;
    for (double v : vals) best = std::max(best, v);
    if (budget <= 0) return best;
    std::vector<std::size_t> starts;
    for (std::size_t k = std::min<std::size_t>(4, pairs.size()); k > 0 && k <= pairs.size(); k *= 2) {
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        const auto m = std::min(k, starts_per_prefix);
        std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(m), idx.end(),
                          [&](std::size_t x, std::size_t y) { return vals[x] > vals[y] || (vals[x] == vals[y] && x < y); });
        for (std::size_t j = 0; j < m; ++j) {
            const auto i = idx[j];
            if (vals[i] > 0.0 && std::find(starts.begin(), starts.end(), i) == starts.end()) starts.push_back(i);
        }
    }
    for (auto i : starts) best = std::max(best, pattern_search(pairs[i], vals[i], f, budget));
    return best;
}

}  // namespace detail

struct RatioRecord {
    DyadicTriple triple;
    /// ‖P_{N₃}Q_{L₃}(u₁u₂)‖ and ‖u₁‖‖u₂‖ at the trial with the largest quotient.
    double measured_lhs = 0.0;
    double rhs_product = 0.0;
    /// Absent when the triple violates the support conditions.
    std::optional<double> predicted_C;
    /// measured_lhs / (predicted_C · rhs_product); the raw quotient when predicted_C is absent.
    double ratio = 0.0;
    int trials = 0;

    explicit RatioRecord(const DyadicTriple& t) : triple(t) {}

    double raw() const { return rhs_product > 0.0 ? measured_lhs / rhs_product : 0.0; }
};

/// Evaluations per pattern search.
inline constexpr int default_search_budget = 48;

inline RatioRecord measure_ratio(const DyadicTriple& triple, int trials = 32, std::uint64_t seed = 1,
                                 int search_budget = default_search_budget, const QuadratureTolerance& tol = {}) {
    if (trials < 1) throw InvalidArgument("measure_ratio needs at least one trial");
    RatioRecord rec(triple);
    rec.trials = trials;
    if (triple.supported()) rec.predicted_C = predicted_constant(triple);
    detail::TrialSequence seq(seed);
    std::vector<detail::TrialPair> pairs;
    for (int t = 0; t < trials; ++t) {
        pairs.push_back(detail::trial_pair(triple.N[0], triple.L[0], triple.N[1], triple.L[1], triple.N[2], seq.next(),
                                           seed, static_cast<std::size_t>(t)));
    }
    double best = -1.0;
    auto f = [&](const Packet& p1, const Packet& p2) {
        const double lhs = localized_product_norm(p1, p2, triple.N[2], triple.L[2], tol);
        const double rhs = packet_l2_norm(p1, tol) * packet_l2_norm(p2, tol);
        if (lhs / rhs > best) {
            best = lhs / rhs;
            rec.measured_lhs = lhs;
            rec.rhs_product = rhs;
        }
        return lhs / rhs;
    };
    detail::search_trials(pairs, f, search_budget);
    rec.ratio = rec.raw() / rec.predicted_C.value_or(1.0);
    return rec;
}

/// Max over trials of ‖Λ⁻¹P_{N₃}∂ₓ(u v)‖_X / (‖u‖_X‖v‖_X) with u, v at
/// modulation L = 1.
inline double lemma34_ratio(DyadicIndex n1, DyadicIndex n2, DyadicIndex n3, int trials = 32,
                            std::uint64_t seed = 1, int search_budget = default_search_budget,
                            const QuadratureTolerance& tol = {}) {
    if (trials < 1) throw InvalidArgument("lemma34_ratio needs at least one trial");
    const auto one = DyadicIndex::from_exponent(0);
    detail::TrialSequence seq(seed);
    std::vector<detail::TrialPair> pairs;
    for (int t = 0; t < trials; ++t) {
        pairs.push_back(detail::trial_pair(n1, one, n2, one, n3, seq.next(), seed, static_cast<std::size_t>(t)));
    }
    return detail::search_trials(
        pairs, [&](const Packet& p1, const Packet& p2) { return lemma34_ratio(p1, p2, n3, tol); }, search_budget);
}

/// Runs f(i) for i < n on up to `jobs` threads.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
    jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += jobs) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct RatioSweep {
    std::vector<RatioRecord> records;
    /// Slope of log raw() against log x.
    double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
};

inline RatioSweep ratio_sweep(const std::vector<DyadicTriple>& triples, const std::vector<double>& x,
                              int trials = 32, std::uint64_t seed = 1, unsigned jobs = 1,
                              int search_budget = default_search_budget) {
    if (triples.size() != x.size()) throw InvalidArgument("ratio_sweep: one x per triple");
    RatioSweep sw;
    sw.records.resize(triples.size(), RatioRecord(triples.empty() ? DyadicTriple::of(1, 1, 1, 1, 1, 1) : triples[0]));
    parallel_for(triples.size(), jobs, [&](std::size_t i) { sw.records[i] = measure_ratio(triples[i], trials, seed, search_budget); });
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (sw.records[i].raw() > 0.0) pts.emplace_back(x[i], sw.records[i].raw());
    }
    if (pts.size() >= 3 && pts.size() == x.size()) sw.fitted_exponent = fit_power_law(pts).exponent;
    return sw;
}

/// N₁ = 2, N₂ = N₃ = N, L = (1, 1, 2N²).
inline std::vector<DyadicTriple> regime_c_triples(const std::vector<double>& ns) {
    std::vector<DyadicTriple> out;
    for (double n : ns) out.push_back(DyadicTriple::of(2, n, n, 1, 1, 2 * n * n));
    return out;
}

struct Lemma34Point {
    std::array<DyadicIndex, 3> N;
    double ratio = 0.0;
};

struct Lemma34Sweep {
    std::vector<Lemma34Point> points;
    double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
};

inline Lemma34Sweep lemma34_sweep(const std::vector<std::array<double, 3>>& ns, const std::vector<double>& x,
                                  int trials = 32, std::uint64_t seed = 1, unsigned jobs = 1,
                                  int search_budget = default_search_budget) {
    if (ns.size() != x.size()) throw InvalidArgument("lemma34_sweep: one x per triple");
    Lemma34Sweep sw;
    sw.points.resize(ns.size());
    parallel_for(ns.size(), jobs, [&](std::size_t i) {
        auto& p = sw.points[i];
        for (int j = 0; j < 3; ++j) p.N[static_cast<std::size_t>(j)] = DyadicIndex::from_value(ns[i][static_cast<std::size_t>(j)]);
        p.ratio = lemma34_ratio(p.N[0], p.N[1], p.N[2], trials, seed, search_budget);
    });
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (sw.points[i].ratio > 0.0) pts.emplace_back(x[i], sw.points[i].ratio);
    }
    if (pts.size() >= 3 && pts.size() == x.size()) sw.fitted_exponent = fit_power_law(pts).exponent;
    return sw;
}

/// Sampling window for make_localized.
struct LocalizedGrid {
    std::size_t num_points = 1024;
    double half_length = 40.0;
    double t_begin = -8.0;
    double t_end = 8.0;
    double dt = 0.25;
};

/// Samples u(t, x) = ψ(t) (2 hl)⁻¹ Σ_k A(ξ_k) e^{i(xξ_k + tξ_k³)},
/// ψ(t) = (2π)⁻¹ ∫ Φ(λ) e^{itλ} dλ.
inline SpacetimeField make_localized(const Packet& p, const LocalizedGrid& cfg = {}) {
    p.validate();
    const GridSpec g(cfg.num_points, cfg.half_length);
    const auto [a, b] = p.xi_support();
    if (std::max(std::abs(a), std::abs(b)) >= g.max_abs_xi()) {
        throw ResolutionError("spatial Nyquist: band edge " + std::to_string(std::max(std::abs(a), std::abs(b))) +
                              " reaches max |xi| " + std::to_string(g.max_abs_xi()));
    }
    if (b - a < 8.0 * g.dxi()) {
        throw ResolutionError("frequency spacing: packet support " + std::to_string(b - a) +
                              " spans fewer than 8 bins of " + std::to_string(g.dxi()));
    }
    if (std::numbers::pi / cfg.dt < 2.0 * p.mod_radius()) {
        throw ResolutionError("time step: pi/dt = " + std::to_string(std::numbers::pi / cfg.dt) +
                              " below 4L = " + std::to_string(2.0 * p.mod_radius()));
    }
    const auto nt = static_cast<std::size_t>(std::llround((cfg.t_end - cfg.t_begin) / cfg.dt)) + 1;
    SpacetimeField out(g, cfg.t_begin, cfg.t_begin + cfg.dt * static_cast<double>(nt - 1), nt);
    const double dtau = detail::two_pi / (cfg.dt * static_cast<double>(nt * time_padding_factor));
    if (dtau > 0.125 * p.L.value()) {
        throw ResolutionError("tau bin: " + std::to_string(dtau) + " exceeds L/8 = " +
                              std::to_string(0.125 * p.L.value()));
    }
    const std::size_t n = g.num_points();
    std::vector<double> amp(n);
    for (std::size_t k = 0; k < n; ++k) amp[k] = p.spectrum(g.xi(k)) * detail::parity(k);
    // ψ by the trapezoid rule; Φ is smooth and compactly supported.
    const std::size_t m = 4096;
    const double r = p.mod_radius();
    const double h = 2.0 * r / static_cast<double>(m);
    std::vector<double> lam, phi;
    for (std::size_t j = 1; j < m; ++j) {
        const double l = -r + h * static_cast<double>(j);
        const double v = p.profile(l);
        if (v != 0.0) {
            lam.push_back(l);
            phi.push_back(v);
        }
    }
    ComplexFft fft(n);
    auto buf = fft.data();
    for (std::size_t j = 0; j < nt; ++j) {
        const double t = out.time(j);
        cplx psi = 0.0;
        for (std::size_t i = 0; i < lam.size(); ++i) psi += phi[i] * std::polar(1.0, t * lam[i]);
        psi *= h / detail::two_pi / g.length();
        for (std::size_t k = 0; k < n; ++k) {
            const double xi = g.xi(k);
            buf[k] = amp[k] == 0.0 ? cplx{} : amp[k] * std::polar(1.0, t * xi * xi * xi);
        }
        fft.backward();
        auto row = out.row(j);
        for (std::size_t k = 0; k < n; ++k) row[k] = psi * buf[k];
    }
    return out;
}

inline SpacetimeField make_localized(DyadicIndex n, DyadicIndex l, std::uint64_t seed, const LocalizedGrid& cfg = {}) {
    return make_localized(default_packet(n, l, seed), cfg);
}

/// Fraction of squared transform mass in |ξ| ∈ [N/2, 2N], |τ - ξ³| ∈ [L/2, 2L]
/// (|ξ| ≤ 2 for N = 1, |τ - ξ³| ≤ 2 for L = 1).
inline double support_fraction(const SpacetimeField& u, DyadicIndex n, DyadicIndex l) {
    const auto spec = spacetime_transform(u);
    auto in = [](DyadicIndex d, double v) {
        const double a = std::abs(v);
        return d.exponent() == 0 ? a <= 2.0 : (a >= 0.5 * d.value() && a <= 2.0 * d.value());
    };
    double inside = 0.0, total = 0.0;
    for (std::size_t m = 0; m < spec.num_times(); ++m) {
        for (std::size_t k = 0; k < spec.num_points(); ++k) {
            const double e = std::norm(spec.at(m, k));
            total += e;
            if (in(n, spec.xi(k)) && in(l, spec.modulation(m, k))) inside += e;
        }
    }
    return total > 0.0 ? inside / total : 0.0;
}

/// ‖P_{N₃}Q_{L₃}(u₁u₂)‖ from sampled fields on the same window.
inline double sampled_product_norm(const SpacetimeField& u1, const SpacetimeField& u2, DyadicIndex n3, DyadicIndex l3) {
    if (!(u1.grid() == u2.grid()) || u1.num_times() != u2.num_times() || u1.t_begin() != u2.t_begin() ||
        u1.t_end() != u2.t_end()) {
        throw InvalidArgument("sampled_product_norm: fields on different windows");
    }
    SpacetimeField w(u1.grid(), u1.t_begin(), u1.t_end(), u1.num_times(), u1.prepared());
    for (std::size_t i = 0; i < w.values().size(); ++i) w.values()[i] = u1.values()[i] * u2.values()[i];
    const auto spec = spacetime_transform(w);
    require_unit_band_resolved(spec);
    double s = 0.0;
    for (std::size_t m = 0; m < spec.num_times(); ++m) {
        for (std::size_t k = 0; k < spec.num_points(); ++k) {
            const double b = bump(n3, spec.xi(k)) * bump(l3, spec.modulation(m, k));
            if (b != 0.0) s += b * b * std::norm(spec.at(m, k));
        }
    }
    return std::sqrt(s * spec.parseval_weight());
}

}  // namespace kdvg

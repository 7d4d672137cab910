#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "kdvg/error.hpp"
#include "kdvg/spectral_core.hpp"

namespace kdvg {

/// 3c sech²(√c (x - x0) / 2), the KdV soliton of speed c.
inline double soliton(double x, double c = 1.0, double x0 = 0.0) {
    const double s = 1.0 / std::cosh(0.5 * std::sqrt(c) * (x - x0));
    return 3.0 * c * s * s;
}

inline SpectralField soliton_field(const GridSpec& g, double c = 1.0, double x0 = 0.0) {
    return transform_of(g, [&](double x) { return soliton(x, c, x0); });
}

/// Soliton plus 0.1 sech(x/2); radiates a dispersive tail.
inline SpectralField perturbed_soliton_field(const GridSpec& g, double c = 1.0, double x0 = 0.0,
                                             double eps = 0.1) {
    return transform_of(g, [&](double x) {
        return soliton(x, c, x0) + eps / std::cosh(0.5 * (x - x0));
    });
}

/// One term a sech²((x - x0)/w) of an analytic data set.
struct SechBump {
    double amplitude;
    double center;
    double width;
};

/// Random sum of sech² bumps; analytic in the strip |Im x| < (π/2) min w.
inline std::vector<SechBump> random_sech_bumps(std::uint64_t seed, int count = 3,
                                               double spread = 6.0) {
    if (count < 1) throw InvalidArgument("need at least one bump");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.5, 2.0);
    std::uniform_real_distribution<double> pos(-spread, spread);
    std::uniform_real_distribution<double> wid(1.0, 2.5);
    std::vector<SechBump> out;
    for (int i = 0; i < count; ++i) out.push_back({amp(rng), pos(rng), wid(rng)});
    return out;
}

inline SpectralField sech_bumps_field(const GridSpec& g, const std::vector<SechBump>& bumps) {
    return transform_of(g, [&](double x) {
        double v = 0.0;
        for (const auto& b : bumps) {
            const double s = 1.0 / std::cosh((x - b.center) / b.width);
            v += b.amplitude * s * s;
        }
        return v;
    });
}

/// Real field with independent Gaussian coefficients on 0 < |k| <= kmax.
inline SpectralField random_band_limited(const GridSpec& g, long kmax, std::uint64_t seed) {
    const long half = static_cast<long>(g.num_points() / 2);
    if (kmax < 1 || kmax >= half) throw InvalidArgument("kmax must lie in [1, n/2)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    SpectralField f(g);
    for (long k = 1; k <= kmax; ++k) {
        const cplx c(d(rng), d(rng));
        f.coeff(k) = c;
        f.coeff(-k) = std::conj(c);
    }
    return f;
}

}  // namespace kdvg

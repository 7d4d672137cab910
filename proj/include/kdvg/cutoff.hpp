#pragma once

#include <cmath>
#include <compare>
#include <string>

#include "kdvg/error.hpp"

namespace kdvg {

/// C^∞ transition equal to 1 for y <= 0 and 0 for y >= 1.
///
/// Built from g(y) = exp(-1/y); symmetric about y = 1/2 where it equals 1/2.
inline double smooth_step(double y) {
    if (y <= 0.0) return 1.0;
    if (y >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - y));
    const double b = std::exp(-1.0 / y);
    return a / (a + b);
}

/// Even cutoff: 1 on [-1, 1], 0 outside (-2, 2), smooth in between.
///
/// The transition is a function of log2|s|, so chi(sqrt 2) = 1/2 and the
/// dyadic bumps built from it are symmetric on a logarithmic frequency axis.
inline double chi(double s) {
    const double a = std::abs(s);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    return smooth_step(std::log2(a));
}

/// A dyadic number 2^j.
///
/// Inhomogeneous sums run over j >= 0; negative exponents are allowed for
/// homogeneous variants.
class DyadicIndex {
public:
    constexpr DyadicIndex() = default;

    static DyadicIndex from_exponent(int j) { return DyadicIndex(j); }

    /// Throws InvalidArgument unless `value` is an exact power of two.
    static DyadicIndex from_value(double value) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw InvalidArgument("dyadic index must be a positive power of two");
        }
        int e = 0;
        const double m = std::frexp(value, &e);
        if (m != 0.5) {
            throw InvalidArgument("dyadic index " + std::to_string(value) +
                                  " is not a power of two");
        }
        return DyadicIndex(e - 1);
    }

    constexpr int exponent() const noexcept { return exponent_; }
    double value() const noexcept { return std::ldexp(1.0, exponent_); }
    bool inhomogeneous() const noexcept { return exponent_ >= 0; }

    DyadicIndex doubled() const { return DyadicIndex(exponent_ + 1); }
    DyadicIndex halved() const { return DyadicIndex(exponent_ - 1); }

    friend constexpr auto operator<=>(DyadicIndex, DyadicIndex) = default;

private:
    explicit constexpr DyadicIndex(int j) : exponent_(j) {}
    int exponent_ = 0;
};

/// Littlewood–Paley bump β_N(s): chi(s) for N = 1, chi(s/N) - chi(2s/N)
/// for N > 1, zero for N < 1.
inline double bump(DyadicIndex n, double s) {
    if (n.exponent() < 0) return 0.0;
    if (n.exponent() == 0) return chi(s);
    const double nv = n.value();
    return chi(s / nv) - chi(2.0 * s / nv);
}

/// Smallest inhomogeneous dyadic N whose bump support reaches |s|.
inline DyadicIndex dyadic_ceiling(double s) {
    const double a = std::abs(s);
    int j = 0;
    while (std::ldexp(2.0, j) < a) ++j;
    return DyadicIndex::from_exponent(j);
}

}  // namespace kdvg

#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "kdvg/error.hpp"

namespace kdvg {

struct PowerLawFit {
    double exponent = 0.0;
    /// log y at log x = 0.
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares of log y against log x.
inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 3) throw InvalidArgument("fit_power_law needs at least 3 points");
    const double n = static_cast<double>(pts.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : pts) {
        if (!(x > 0.0) || !(y > 0.0)) throw InvalidArgument("fit_power_law needs positive values");
        sx += std::log(x);
        sy += std::log(y);
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : pts) {
        const double dx = std::log(x) - mx;
        const double dy = std::log(y) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw InvalidArgument("fit_power_law needs distinct x values");
    PowerLawFit f;
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    double ss_res = 0.0;
    for (const auto& [x, y] : pts) {
        const double r = std::log(y) - (f.intercept + f.exponent * std::log(x));
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

}  // namespace kdvg

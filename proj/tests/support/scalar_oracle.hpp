#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace nltl2p::testing {

/// h(t) = nu t^p + (t - 1)^2 / 2 for t >= 0.
inline double scalar_objective(double t, double nu, double p) {
    return (t == 0.0 ? 0.0 : nu * std::pow(t, p)) + 0.5 * (t - 1.0) * (t - 1.0);
}

struct GridMinimum {
    double t = 0.0;
    double value = 0.0;
};

/// Grid search over [0, hi] at `fine` resolution. A coarse pass at `coarse`
/// resolution locates every local minimum, then each is refined on the fine
/// grid within two coarse cells. t = 0 is always a candidate.
inline GridMinimum grid_minimize(double nu, double p, double hi = 1.5, double coarse = 1e-3, double fine = 1e-7) {
    const auto n = static_cast<long>(std::llround(hi / coarse));
    std::vector<double> h(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) h[static_cast<std::size_t>(i)] = scalar_objective(coarse * static_cast<double>(i), nu, p);
    GridMinimum best{0.0, h[0]};
    const long span = static_cast<long>(std::llround(2.0 * coarse / fine));
    for (long i = 0; i <= n; ++i) {
        const double here = h[static_cast<std::size_t>(i)];
        const bool left_ok = i == 0 || here <= h[static_cast<std::size_t>(i - 1)];
        const bool right_ok = i == n || here <= h[static_cast<std::size_t>(i + 1)];
        if (!(left_ok && right_ok)) continue;
        const double center = coarse * static_cast<double>(i);
        for (long k = -span; k <= span; ++k) {
            const double t = center + fine * static_cast<double>(k);
            if (t < 0.0 || t > hi) continue;
            const double v = scalar_objective(t, nu, p);
            if (v < best.value) best = {t, v};
        }
    }
    return best;
}

/// Root of nu p t^(p-1) + t - 1 on (lo, 1) by plain bisection.
inline double bisect_root(double nu, double p, double lo) {
    double a = lo, b = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        const double f = nu * p * std::pow(m, p - 1.0) + m - 1.0;
        if (f < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace nltl2p::testing

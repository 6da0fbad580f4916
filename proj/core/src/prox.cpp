#include "nltl2p/prox.hpp"

#include "nltl2p/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace nltl2p {

namespace {

void check_p(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw UsageError("p must lie in (0, 1) (got " + std::to_string(p) + ")");
    }
}

double root_residual(double t, double nu, double p) { return nu * p * std::pow(t, p - 1.0) + t - 1.0; }

/// Largest root of x^3 - x + nu/2 = 0, squared. Valid when 27 nu^2 < 16.
double half_power_closed_form(double nu) {
    const double arg = -3.0 * std::sqrt(3.0) * nu / 4.0;
    const double x = 2.0 / std::sqrt(3.0) * std::cos(std::acos(arg) / 3.0);
    return x * x;
}

double newton_root(double nu, double p, double tau) {
    double lo = tau;
    double hi = 1.0;
    double t = 0.5 * (tau + 1.0);
    for (int it = 0; it < 100; ++it) {
        const double f = root_residual(t, nu, p);
        if (std::abs(f) <= 1e-12) return t;
        // f is increasing on (tau, 1): negative left of the root, positive right of it.
        if (f < 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        const double df = nu * p * (p - 1.0) * std::pow(t, p - 2.0) + 1.0;
        double next = t - f / df;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == t) return t;
        t = next;
    }
    std::ostringstream msg;
    msg.precision(17);
    msg << "scalar l2p solver: Newton did not converge (nu = " << nu << ", p = " << p << ")";
    throw NumericalError(msg.str());
}

}  // namespace

L2pThresholds L2pThresholds::make(double mu, double p) {
    check_p(p);
    if (!(mu > 0.0)) throw UsageError("l2p prox: mu must be positive");
    L2pThresholds th;
    th.p = p;
    th.mu = mu;
    th.beta0 = std::pow(2.0 * mu * (1.0 - p), 1.0 / (2.0 - p));
    th.zero_cutoff = th.beta0 * (2.0 - p) / (2.0 * (1.0 - p));
    return th;
}

double scalar_nu0(double p) {
    check_p(p);
    return std::pow(2.0 * (1.0 - p), 1.0 - p) / std::pow(2.0 - p, 2.0 - p);
}

double scalar_tau(double nu, double p) { return std::pow(2.0 * nu * (1.0 - p), 1.0 / (2.0 - p)); }

double solve_scalar_t(double nu, double p) {
    check_p(p);
    if (!(nu > 0.0)) throw UsageError("scalar l2p solver: nu must be positive");
    if (nu >= scalar_nu0(p)) return 0.0;
    const double tau = scalar_tau(nu, p);
    if (p == 0.5) {
        const double t = half_power_closed_form(nu);
        if (t > tau && t < 1.0 && std::isfinite(t)) return t;
    }
    return newton_root(nu, p, tau);
}

double l2p_shrink_factor(double beta, double mu, double p) {
    const auto th = L2pThresholds::make(mu, p);
    if (beta <= th.zero_cutoff) return 0.0;
    return solve_scalar_t(mu * std::pow(beta, p - 2.0), p);
}

Tensor3 prox_l2p(const Tensor3& t, double mu, double p) {
    const auto th = L2pThresholds::make(mu, p);
    Tensor3 out(t.dims());
    const auto [n1, n2, n3] = t.dims();
    for (std::size_t k = 0; k < n3; ++k) {
        for (std::size_t j = 0; j < n2; ++j) {
            const auto in = t.fiber(j, k);
            double sq = 0.0;
            for (double v : in) sq += v * v;
            const double beta = std::sqrt(sq);
            if (beta <= th.zero_cutoff) continue;
            double factor = 0.0;
            try {
                factor = solve_scalar_t(mu * std::pow(beta, p - 2.0), p);
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " at fiber (i2 = " + std::to_string(j) +
                                     ", i3 = " + std::to_string(k) + ")");
            }
            auto o = out.fiber(j, k);
            for (std::size_t i = 0; i < n1; ++i) o[i] = factor * in[i];
        }
    }
    return out;
}

Tensor4 prox_weighted_l1(const Tensor4& g, std::span<const double> w, double step) {
    if (w.size() != g.count()) throw UsageError("prox_weighted_l1: weight length mismatch");
    if (!(step > 0.0)) throw UsageError("prox_weighted_l1: step must be positive");
    Tensor4 out = g;
    for (std::size_t j = 0; j < g.count(); ++j) {
        if (w[j] < 0.0) throw UsageError("prox_weighted_l1: negative weight");
        const double thr = step * w[j];
        for (double& v : out[j].data()) v = soft_threshold(v, thr);
    }
    return out;
}

}  // namespace nltl2p

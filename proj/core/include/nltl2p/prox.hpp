#pragma once

#include "nltl2p/tensor.hpp"

#include <span>

namespace nltl2p {

/// Thresholds of the fiber-wise proximal map of mu * ||.||_2^p.
struct L2pThresholds {
    double p = 0.5;
    double mu = 1.0;
    double beta0 = 0.0;        // [2 mu (1 - p)]^(1 / (2 - p))
    double zero_cutoff = 0.0;  // beta0 (2 - p) / (2 (1 - p)); fibers at or below it vanish

    static L2pThresholds make(double mu, double p);
};

/// nu_0(p) = [2(1-p)]^(1-p) / (2-p)^(2-p): above it the scalar problem is solved by t = 0.
double scalar_nu0(double p);

/// tau(nu) = [2 nu (1-p)]^(1/(2-p)), the lower end of the bracket holding the nonzero minimizer.
double scalar_tau(double nu, double p);

/// Minimizer over t >= 0 of nu t^p + (t - 1)^2 / 2.
///
/// Returns 0 for nu >= nu_0 (the tie at nu_0 resolves to 0). Otherwise
/// returns the root in (tau, 1) of nu p t^(p-1) + t - 1: in closed form for
/// p = 1/2, by bracketed Newton from (tau + 1) / 2 for other p. Throws
/// NumericalError if Newton does not reach |residual| <= 1e-12 in 100 steps.
double solve_scalar_t(double nu, double p);

/// Shrink factor Gamma_mu(beta) applied to a fiber of Euclidean norm beta.
double l2p_shrink_factor(double beta, double mu, double p);

/// Proximal map of mu * sum_fibers ||fiber||_2^p; each mode-1 fiber s is
/// replaced by Gamma_mu(||s||) s.
Tensor3 prox_l2p(const Tensor3& t, double mu, double p);

/// sign(x) max(|x| - threshold, 0).
inline double soft_threshold(double x, double threshold) noexcept {
    if (x > threshold) return x - threshold;
    if (x < -threshold) return x + threshold;
    return 0.0;
}

/// Slab-wise soft thresholding with threshold step * w_j on slab j.
Tensor4 prox_weighted_l1(const Tensor4& g, std::span<const double> w, double step);

}  // namespace nltl2p

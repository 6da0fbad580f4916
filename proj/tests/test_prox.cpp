#include "nltl2p/errors.hpp"
#include "nltl2p/prox.hpp"
#include "support/random.hpp"
#include "support/scalar_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nltl2p;
using nltl2p::testing::grid_minimize;
using nltl2p::testing::scalar_objective;

namespace {

const double kPs[] = {0.1, 0.3, 0.5, 0.7, 0.9};

double fiber_objective(std::span<const double> s, std::span<const double> ref, double mu, double p) {
    double n2 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        n2 += s[i] * s[i];
        d2 += (s[i] - ref[i]) * (s[i] - ref[i]);
    }
    return (n2 == 0.0 ? 0.0 : mu * std::pow(std::sqrt(n2), p)) + 0.5 * d2;
}

}  // namespace

TEST(ScalarProblem, Nu0ClosedForm) {
    for (double p : kPs) {
        const double expect = std::pow(2.0 * (1.0 - p), 1.0 - p) / std::pow(2.0 - p, 2.0 - p);
        EXPECT_DOUBLE_EQ(scalar_nu0(p), expect);
    }
}

TEST(ScalarProblem, Nu0IsTheTieBetweenZeroAndTheInteriorMinimum) {
    // At nu0 the interior minimum value equals h(0) = 1/2; just above it
    // exceeds 1/2, just below it is smaller.
    for (double p : kPs) {
        const double nu0 = scalar_nu0(p);
        const auto interior = [&](double nu) {
            const double t = nltl2p::testing::bisect_root(nu, p, scalar_tau(nu, p));
            return scalar_objective(t, nu, p);
        };
        EXPECT_NEAR(interior(nu0), 0.5, 1e-12) << "p = " << p;
        EXPECT_GT(interior(nu0 * (1.0 - 1e-6)), 0.5 - 1e-3);
        EXPECT_LT(interior(nu0 * (1.0 - 1e-6)), 0.5);
    }
}

TEST(ScalarProblem, AboveNu0ReturnsZero) {
    for (double p : kPs) {
        const double nu0 = scalar_nu0(p);
        EXPECT_EQ(solve_scalar_t(nu0, p), 0.0);
        EXPECT_EQ(solve_scalar_t(nu0 * 1.01, p), 0.0);
        EXPECT_EQ(solve_scalar_t(10.0, p), 0.0);
        EXPECT_GT(solve_scalar_t(nu0 * (1.0 - 1e-9), p), 0.0);
    }
}

TEST(ScalarProblem, VanishingPenalty) {
    const double t = solve_scalar_t(1e-12, 0.5);
    EXPECT_GT(t, 1.0 - 1e-5);
    EXPECT_LT(t, 1.0);
}

TEST(ScalarProblem, HalfPowerMatchesGridSearch) {
    const auto g = grid_minimize(0.3, 0.5);
    EXPECT_NEAR(solve_scalar_t(0.3, 0.5), g.t, 1e-6);
}

TEST(ScalarProblem, HalfPowerClosedFormMatchesBisection) {
    for (double nu : {1e-6, 0.01, 0.1, 0.3, 0.5, 0.54}) {
        ASSERT_LT(nu, scalar_nu0(0.5));
        const double t = solve_scalar_t(nu, 0.5);
        EXPECT_NEAR(t, nltl2p::testing::bisect_root(nu, 0.5, scalar_tau(nu, 0.5)), 1e-12) << "nu = " << nu;
    }
}

TEST(ScalarProblem, RootSatisfiesStationarityAndBracket) {
    for (double p : kPs) {
        const double nu0 = scalar_nu0(p);
        for (double frac : {1e-4, 0.1, 0.5, 0.9, 0.999}) {
            const double nu = frac * nu0;
            const double t = solve_scalar_t(nu, p);
            EXPECT_GT(t, scalar_tau(nu, p));
            EXPECT_LT(t, 1.0);
            EXPECT_LE(std::abs(nu * p * std::pow(t, p - 1.0) + t - 1.0), 1e-10);
        }
    }
}

TEST(ScalarProblem, GlobalMinimumAgainstGrid) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const double p = kPs[trial % 5];
        const double nu = 1.3 * scalar_nu0(p) * rng.uniform();
        if (nu == 0.0) continue;
        const double t = solve_scalar_t(nu, p);
        const auto g = grid_minimize(nu, p);
        EXPECT_LE(scalar_objective(t, nu, p), g.value + 1e-12);
    }
}

TEST(ScalarProblem, InvalidArguments) {
    EXPECT_THROW(solve_scalar_t(0.1, 1.0), UsageError);
    EXPECT_THROW(solve_scalar_t(0.1, 0.0), UsageError);
    EXPECT_THROW(solve_scalar_t(0.0, 0.5), UsageError);
    EXPECT_THROW(solve_scalar_t(-1.0, 0.5), UsageError);
}

TEST(Thresholds, CutoffAgreesWithNu0) {
    // beta <= cutoff  <=>  mu beta^(p-2) >= nu0.
    for (double p : kPs) {
        for (double mu : {0.05, 0.7, 3.0}) {
            const auto th = L2pThresholds::make(mu, p);
            EXPECT_NEAR(th.beta0, std::pow(2.0 * mu * (1.0 - p), 1.0 / (2.0 - p)), 1e-14 * th.beta0);
            EXPECT_GT(th.zero_cutoff, th.beta0);
            EXPECT_NEAR(mu * std::pow(th.zero_cutoff, p - 2.0), scalar_nu0(p), 1e-12 * scalar_nu0(p));
        }
    }
}

TEST(Thresholds, LowerBracketIsBeta0OverBeta) {
    // tau(mu beta^(p-2)) = beta0 / beta.
    for (double p : kPs) {
        const double mu = 0.8;
        const auto th = L2pThresholds::make(mu, p);
        for (double beta : {0.5, 1.0, 2.0, 7.0}) {
            EXPECT_NEAR(scalar_tau(mu * std::pow(beta, p - 2.0), p), th.beta0 / beta, 1e-13);
        }
    }
}

TEST(ShrinkFactor, ThresholdExactness) {
    for (double p : kPs) {
        for (double mu : {0.1, 1.0, 4.0}) {
            const auto th = L2pThresholds::make(mu, p);
            EXPECT_EQ(l2p_shrink_factor(th.zero_cutoff, mu, p), 0.0);
            EXPECT_EQ(l2p_shrink_factor(0.5 * th.zero_cutoff, mu, p), 0.0);
            EXPECT_GT(l2p_shrink_factor(th.zero_cutoff * (1.0 + 1e-9), mu, p), 0.0);
        }
    }
}

TEST(ShrinkFactor, ShrunkNormIsMonotone) {
    for (double p : kPs) {
        const double mu = 0.9;
        double prev = 0.0;
        for (int i = 1; i <= 400; ++i) {
            const double beta = 0.01 * i;
            const double out = l2p_shrink_factor(beta, mu, p) * beta;
            EXPECT_GE(out, prev) << "p = " << p << " beta = " << beta;
            prev = out;
        }
    }
}

TEST(ProxL2p, ZeroFiberStaysZero) {
    Tensor3 t({3, 2, 2});
    t(0, 0, 0) = 5.0;
    const Tensor3 out = prox_l2p(t, 0.5, 0.5);
    EXPECT_EQ(out(0, 1, 0), 0.0);
    EXPECT_EQ(out(1, 1, 1), 0.0);
    EXPECT_GT(out(0, 0, 0), 0.0);
}

TEST(ProxL2p, FiberAtCutoffVanishes) {
    const double mu = 0.7, p = 0.5;
    const auto th = L2pThresholds::make(mu, p);
    Tensor3 t({4, 2, 1});
    t(2, 0, 0) = th.zero_cutoff;  // norm exactly the cutoff
    t(1, 1, 0) = th.zero_cutoff * (1.0 + 1e-9);
    const Tensor3 out = prox_l2p(t, mu, p);
    EXPECT_EQ(out(2, 0, 0), 0.0);
    EXPECT_GT(out(1, 1, 0), 0.0);
}

TEST(ProxL2p, RandomTensorAgainstDirectionalOracle) {
    Rng rng(32);
    const double mu = 0.7, p = 0.5;
    Tensor3 t = nltl2p::testing::random_tensor({8, 5, 3}, rng);
    t *= 0.4;
    const Tensor3 out = prox_l2p(t, mu, p);
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t j = 0; j < 5; ++j) {
            const auto in = t.fiber(j, k);
            const auto o = out.fiber(j, k);
            double beta2 = 0.0;
            for (double v : in) beta2 += v * v;
            const double beta = std::sqrt(beta2);
            // Objective along the ray t * in equals beta^2 h(t) with nu = mu beta^(p-2).
            const auto g = grid_minimize(mu * std::pow(beta, p - 2.0), p, 1.5, 1e-3, 1e-6);
            EXPECT_LE(fiber_objective(o, in, mu, p), beta2 * g.value + 1e-9);
            // Objective dominance over the input and the zero fiber.
            std::vector<double> zero(in.size(), 0.0);
            EXPECT_LE(fiber_objective(o, in, mu, p), fiber_objective(in, in, mu, p) + 1e-15);
            EXPECT_LE(fiber_objective(o, in, mu, p), fiber_objective(zero, in, mu, p) + 1e-15);
            // Collinearity with a nonnegative factor.
            double ratio = -1.0;
            for (std::size_t i = 0; i < in.size(); ++i) {
                if (in[i] == 0.0) continue;
                const double r = o[i] / in[i];
                EXPECT_GE(r, 0.0);
                if (ratio >= 0.0) EXPECT_NEAR(r, ratio, 1e-14);
                ratio = r;
            }
        }
    }
}

TEST(ProxL2p, NonzeroOutputSatisfiesStationarity) {
    Rng rng(33);
    const double mu = 0.3;
    for (double p : kPs) {
        const Tensor3 t = nltl2p::testing::random_tensor({6, 4, 2}, rng);
        const Tensor3 out = prox_l2p(t, mu, p);
        for (std::size_t k = 0; k < 2; ++k) {
            for (std::size_t j = 0; j < 4; ++j) {
                double b2 = 0.0, o2 = 0.0;
                for (double v : t.fiber(j, k)) b2 += v * v;
                for (double v : out.fiber(j, k)) o2 += v * v;
                if (o2 == 0.0) continue;
                const double beta = std::sqrt(b2), tt = std::sqrt(o2) / beta;
                const double nu = mu * std::pow(beta, p - 2.0);
                EXPECT_LE(std::abs(nu * p * std::pow(tt, p - 1.0) + tt - 1.0), 1e-10);
            }
        }
    }
}

TEST(ProxWeightedL1, Definition) {
    Tensor4 g({2, 1, 1}, 1);
    g[0](0, 0, 0) = 5.0;
    g[0](1, 0, 0) = -1.5;
    const std::vector<double> w{2.0};
    const Tensor4 out = prox_weighted_l1(g, w, 1.0);
    EXPECT_EQ(out[0](0, 0, 0), 3.0);
    EXPECT_EQ(out[0](1, 0, 0), 0.0);
}

TEST(ProxWeightedL1, ZeroThresholdIsIdentity) {
    Rng rng(34);
    const Tensor4 g = nltl2p::testing::random_stack({3, 2, 2}, 3, rng);
    const std::vector<double> w{0.0, 0.0, 0.0};
    EXPECT_EQ(prox_weighted_l1(g, w, 0.5), g);
}

TEST(ProxWeightedL1, PerturbationOracle) {
    Rng rng(35);
    const Tensor4 g = nltl2p::testing::random_stack({3, 2, 2}, 3, rng);
    const std::vector<double> w{0.2, 0.7, 1.5};
    const double step = 0.8;
    const Tensor4 out = prox_weighted_l1(g, w, step);
    const auto objective = [&](const Tensor4& x) {
        const Tensor4 d = x - g;
        return step * weighted_l1(x, w) + 0.5 * frobenius_sq(d);
    };
    const double base = objective(out);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t i = 0; i < out[j].size(); ++i) {
            for (double eps : {1e-4, -1e-4}) {
                Tensor4 x = out;
                x[j].data()[i] += eps;
                EXPECT_LE(base, objective(x) + 1e-15);
            }
        }
    }
}

TEST(ProxWeightedL1, ArgumentChecks) {
    const Tensor4 g({2, 1, 1}, 2);
    const std::vector<double> w{1.0};
    EXPECT_THROW(prox_weighted_l1(g, w, 1.0), UsageError);
    const std::vector<double> w2{1.0, 1.0};
    EXPECT_THROW(prox_weighted_l1(g, w2, 0.0), UsageError);
}

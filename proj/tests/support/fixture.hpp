#pragma once

#include "nltl2p/io.hpp"
#include "nltl2p/noise.hpp"
#include "nltl2p/solver.hpp"
#include "nltl2p/tensor.hpp"

#include <cmath>
#include <numbers>

namespace nltl2p::testing {

/// Smooth cube of exact multilinear rank (3, 3, 3), min-max scaled to [0, 1].
/// Factors are the first three cosine basis vectors per mode (the first is
/// constant, so the affine rescaling keeps the rank); the core is drawn from
/// a seeded Gaussian.
inline Tensor3 low_rank_cube(const Dims3& dims, std::uint64_t seed = 7) {
    constexpr std::size_t r = 3;
    std::array<Matrix, 3> u;
    for (std::size_t m = 0; m < 3; ++m) {
        const auto n = static_cast<Eigen::Index>(dims[m]);
        u[m].resize(n, r);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(r); ++k) {
                u[m](i, k) = std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(i) + 0.5) /
                                      static_cast<double>(n));
            }
        }
    }
    Rng rng(seed);
    Tensor3 core({r, r, r});
    for (double& v : core.data()) v = rng.normal();
    core(0, 0, 0) += 3.0;
    Tensor3 t(dims);
    for (std::size_t k = 0; k < dims[2]; ++k) {
        for (std::size_t j = 0; j < dims[1]; ++j) {
            for (std::size_t i = 0; i < dims[0]; ++i) {
                double s = 0.0;
                for (std::size_t c = 0; c < r; ++c) {
                    for (std::size_t b = 0; b < r; ++b) {
                        for (std::size_t a = 0; a < r; ++a) {
                            s += core(a, b, c) * u[0](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) *
                                 u[1](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) *
                                 u[2](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
                        }
                    }
                }
                t(i, j, k) = s;
            }
        }
    }
    normalize_minmax(t);
    return t;
}

/// Case-1 style corruption: Gaussian sigma 0.1 on every band plus stripes on
/// every band, 30 % of columns, offsets with sigma 0.2.
inline NoiseSpec case1_spec(std::uint64_t seed) {
    NoiseSpec spec;
    spec.gaussian_sigma = 0.1;
    spec.stripe_bands = BandRule{BandSelection::All, {}, 0.0};
    spec.stripe_density = 0.3;
    spec.stripe_sigma = 0.2;
    spec.seed = seed;
    return spec;
}

inline constexpr Dims3 kFixtureDims{32, 32, 16};
inline constexpr std::uint64_t kFixtureNoiseSeed = 11;

/// Solver settings for the 32 x 32 x 16 restoration fixture. Spectral rank 1
/// keeps the stripes out of the low-rank part: the fixture's second and third
/// spectral components are small next to the stripe energy.
inline SolverConfig fixture_config() {
    SolverConfig c;
    c.delta = 0.5;
    c.gamma = 0.5;
    c.p = 0.7;
    c.weight = 0.05;
    c.ranks = {6, 2, 1};
    c.block_matching = {4, 4, 12, 8, 1};
    c.max_outer_iters = 50;
    c.bm_refresh_iters = 2;
    c.rel_tol = 1e-15;
    return c;
}

}  // namespace nltl2p::testing

#pragma once

#include "nltl2p/tensor.hpp"

#include <array>
#include <cstddef>

namespace nltl2p {

using Ranks3 = std::array<std::size_t, 3>;

/// A = U diag(sigma) V^T with U m x n, V n x n, sigma nonincreasing.
struct ReducedSvd {
    Matrix u;
    Vector sigma;
    Matrix v;
};

/// Reduced SVD of an m x n matrix with m >= n.
ReducedSvd reduced_svd(const Matrix& a);

struct StiefelProjection {
    Matrix x;
    /// Set when A is rank deficient: X is then one of several minimizers.
    bool degenerate = false;
};

/// Nearest matrix with orthonormal columns, U V^T from a reduced SVD of A.
StiefelProjection project_stiefel(const Matrix& a);

/// The k leading left singular vectors of a (any shape, k <= rows).
Matrix leading_left_singular_vectors(const Matrix& a, std::size_t k);

/// Independent Tucker decomposition of a group stack: per slab j,
/// Y_j ~ G_j x_1 X1_j x_2 X2_j x_3 X3_j.
struct TuckerStack {
    Tensor4 core;
    std::array<FactorStack, 3> factors;
    /// Some slab had a rank-deficient unfolding, so its factors are not unique.
    bool degenerate = false;
};

/// Truncated HOSVD of every slab: factors are the leading left singular
/// vectors of the slab's unfoldings, core = slab x_i X_i^T.
TuckerStack init_hosvd(const Tensor4& y, const Ranks3& ranks);

/// [G] x_1 [X1] x_2 [X2] x_3 [X3], slab by slab.
Tensor4 compose(const Tensor4& g, const FactorStack& x1, const FactorStack& x2, const FactorStack& x3);

/// [Y] x_1 [X1]^T x_2 [X2]^T x_3 [X3]^T, slab by slab.
Tensor4 project_to_core(const Tensor4& y, const FactorStack& x1, const FactorStack& x2,
                        const FactorStack& x3);

}  // namespace nltl2p

#include "nltl2p/lowrank.hpp"

#include "nltl2p/errors.hpp"
#include "nltl2p/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace nltl2p {

namespace {

constexpr double kRankTol = 1e-12;

void check_stack(const Tensor4& g, const FactorStack& x1, const FactorStack& x2,
                 const FactorStack& x3, bool factors_map_core) {
    const std::array<const FactorStack*, 3> xs{&x1, &x2, &x3};
    for (std::size_t i = 0; i < 3; ++i) {
        if (xs[i]->count() != g.count()) {
            throw UsageError("factor stack " + std::to_string(i + 1) + " has wrong slab count");
        }
        const std::size_t expected = factors_map_core ? xs[i]->cols() : xs[i]->rows();
        if (expected != g.slab_dims()[i]) {
            throw UsageError("factor stack " + std::to_string(i + 1) + " does not conform to the slab dims");
        }
    }
}

}  // namespace

ReducedSvd reduced_svd(const Matrix& a) {
    if (a.rows() < a.cols()) {
        throw UsageError("reduced_svd: expected rows >= cols (got " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ")");
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
        throw NumericalError("reduced_svd: SVD did not converge");
    }
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

StiefelProjection project_stiefel(const Matrix& a) {
    if (a.rows() < a.cols()) throw UsageError("project_stiefel: expected rows >= cols");
    const auto n = a.cols();
    if (n == 0) return {Matrix(a.rows(), 0), false};
    if (a.norm() == 0.0) {
        return {Matrix::Identity(a.rows(), n), true};
    }
    const auto svd = reduced_svd(a);
    StiefelProjection out;
    out.x = svd.u * svd.v.transpose();
    out.degenerate = svd.sigma(n - 1) <= kRankTol * svd.sigma(0);
    return out;
}

Matrix leading_left_singular_vectors(const Matrix& a, std::size_t k) {
    if (k > static_cast<std::size_t>(a.rows())) {
        throw UsageError("leading_left_singular_vectors: rank exceeds dimension");
    }
    const auto kk = static_cast<Eigen::Index>(k);
    if (a.cols() >= a.rows()) {
        Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU);
        if (svd.info() != Eigen::Success) throw NumericalError("HOSVD: SVD did not converge");
        return svd.matrixU().leftCols(kk);
    }
    // Tall unfolding: the thin U has only cols() columns; complete it to an
    // orthonormal basis when more vectors are requested.
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success) throw NumericalError("HOSVD: SVD did not converge");
    Matrix u = svd.matrixU();
    if (kk <= u.cols()) return u.leftCols(kk);
    Eigen::HouseholderQR<Matrix> qr(u);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.rows());
    Matrix out(a.rows(), kk);
    out.leftCols(u.cols()) = u;
    out.rightCols(kk - u.cols()) = q.middleCols(u.cols(), kk - u.cols());
    return out;
}

TuckerStack init_hosvd(const Tensor4& y, const Ranks3& ranks) {
    const Dims3 m = y.slab_dims();
    for (std::size_t i = 0; i < 3; ++i) {
        if (ranks[i] == 0 || ranks[i] > m[i]) {
            throw UsageError("init_hosvd: rank " + std::to_string(ranks[i]) + " invalid for mode " +
                             std::to_string(i + 1) + " of size " + std::to_string(m[i]));
        }
    }
    const std::size_t count = y.count();
    TuckerStack out;
    out.core = Tensor4({ranks[0], ranks[1], ranks[2]}, count);
    for (std::size_t i = 0; i < 3; ++i) out.factors[i] = FactorStack(m[i], ranks[i], count);
    std::vector<char> degenerate(count, 0);

    parallel_for(count, [&](std::size_t j) {
        const Tensor3& slab = y[j];
        std::array<Matrix, 3> x;
        for (int mode = 1; mode <= 3; ++mode) {
            const auto i = static_cast<std::size_t>(mode - 1);
            const Matrix unf = unfold(slab, mode);
            x[i] = leading_left_singular_vectors(unf, ranks[i]);
            // A zero slab gives arbitrary (still orthonormal) factors.
            if (unf.norm() == 0.0) degenerate[j] = 1;
            out.factors[i][j] = x[i];
        }
        out.core[j] = multilinear_product_transposed(slab, x[0], x[1], x[2]);
    });
    out.degenerate = std::find(degenerate.begin(), degenerate.end(), 1) != degenerate.end();
    return out;
}

Tensor4 compose(const Tensor4& g, const FactorStack& x1, const FactorStack& x2, const FactorStack& x3) {
    check_stack(g, x1, x2, x3, true);
    Tensor4 out({x1.rows(), x2.rows(), x3.rows()}, g.count());
    parallel_for(g.count(), [&](std::size_t j) {
        out[j] = multilinear_product(g[j], x1[j], x2[j], x3[j]);
    });
    return out;
}

Tensor4 project_to_core(const Tensor4& y, const FactorStack& x1, const FactorStack& x2,
                        const FactorStack& x3) {
    check_stack(y, x1, x2, x3, false);
    Tensor4 out({x1.cols(), x2.cols(), x3.cols()}, y.count());
    parallel_for(y.count(), [&](std::size_t j) {
        out[j] = multilinear_product_transposed(y[j], x1[j], x2[j], x3[j]);
    });
    return out;
}

}  // namespace nltl2p

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace nltl2p {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims3 = std::array<std::size_t, 3>;

/// Dense real third-order tensor.
///
/// Storage is first-index-fastest: entry (i1, i2, i3) lives at
/// i1 + I1 * (i2 + I2 * i3). With this layout the mode-1 unfolding is the
/// storage itself viewed as a column-major I1 x (I2 I3) matrix, and every
/// mode-1 fiber is a contiguous run of I1 values.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(Dims3 dims, double fill = 0.0);
    Tensor3(Dims3 dims, std::vector<double> data);

    const Dims3& dims() const noexcept { return dims_; }
    std::size_t dim(int mode) const;  // mode in {1, 2, 3}
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i1, std::size_t i2, std::size_t i3) noexcept {
        return data_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
    }
    double operator()(std::size_t i1, std::size_t i2, std::size_t i3) const noexcept {
        return data_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    /// The (i2, i3) mode-1 fiber as a contiguous span.
    std::span<double> fiber(std::size_t i2, std::size_t i3) noexcept;
    std::span<const double> fiber(std::size_t i2, std::size_t i3) const noexcept;

    /// Mode-1 unfolding as a zero-copy view.
    Eigen::Map<Matrix> mode1() noexcept;
    Eigen::Map<const Matrix> mode1() const noexcept;

    void fill(double value) noexcept;
    bool all_finite() const noexcept;

    Tensor3& operator+=(const Tensor3& other);
    Tensor3& operator-=(const Tensor3& other);
    Tensor3& operator*=(double scale) noexcept;

    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(Tensor3 a, double s) { return a *= s; }
    friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

    bool operator==(const Tensor3&) const = default;

private:
    Dims3 dims_{0, 0, 0};
    std::vector<double> data_;
};

/// Entrywise product.
Tensor3 hadamard(const Tensor3& a, const Tensor3& b);

/// Stack of N independent third-order tensors of identical dims (m1, m2, m3).
class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(Dims3 slab_dims, std::size_t count, double fill = 0.0);
    explicit Tensor4(std::vector<Tensor3> slabs);

    const Dims3& slab_dims() const noexcept { return slab_dims_; }
    std::size_t count() const noexcept { return slabs_.size(); }

    Tensor3& slab(std::size_t j) { return slabs_.at(j); }
    const Tensor3& slab(std::size_t j) const { return slabs_.at(j); }
    Tensor3& operator[](std::size_t j) noexcept { return slabs_[j]; }
    const Tensor3& operator[](std::size_t j) const noexcept { return slabs_[j]; }

    auto begin() noexcept { return slabs_.begin(); }
    auto end() noexcept { return slabs_.end(); }
    auto begin() const noexcept { return slabs_.begin(); }
    auto end() const noexcept { return slabs_.end(); }

    Tensor4& operator+=(const Tensor4& other);
    Tensor4& operator-=(const Tensor4& other);
    Tensor4& operator*=(double scale) noexcept;

    friend Tensor4 operator+(Tensor4 a, const Tensor4& b) { return a += b; }
    friend Tensor4 operator-(Tensor4 a, const Tensor4& b) { return a -= b; }
    friend Tensor4 operator*(Tensor4 a, double s) { return a *= s; }
    friend Tensor4 operator*(double s, Tensor4 a) { return a *= s; }

    bool operator==(const Tensor4&) const = default;

private:
    Dims3 slab_dims_{0, 0, 0};
    std::vector<Tensor3> slabs_;
};

/// Stack of N matrices of shape m x n (m >= n), e.g. the per-group factors of one mode.
class FactorStack {
public:
    FactorStack() = default;
    FactorStack(std::size_t rows, std::size_t cols, std::size_t count);
    explicit FactorStack(std::vector<Matrix> mats);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t count() const noexcept { return mats_.size(); }

    Matrix& operator[](std::size_t j) noexcept { return mats_[j]; }
    const Matrix& operator[](std::size_t j) const noexcept { return mats_[j]; }

    /// max_j ||X_j^T X_j - I||_F.
    double orthonormality_error() const;
    bool is_orthonormal(double tol = 1e-10) const { return orthonormality_error() <= tol; }

    /// Frobenius norm of the whole stack.
    double frobenius() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Matrix> mats_;
};

FactorStack operator-(const FactorStack& a, const FactorStack& b);

// ---------------------------------------------------------------------------
// Unfolding and mode products. Modes are 1-based, as in the mode-k notation.
// ---------------------------------------------------------------------------

/// Mode-k unfolding: I_k x prod_{j != k} I_j, with entry (i1,i2,i3) at column
/// j = sum_{l != k} i_l * prod_{m < l, m != k} I_m (0-based).
Matrix unfold(const Tensor3& t, int mode);

/// Inverse of unfold.
Tensor3 fold(const Matrix& m, int mode, const Dims3& dims);

/// t x_k m, i.e. the tensor whose mode-k unfolding is m * unfold(t, k).
Tensor3 mode_product(const Tensor3& t, const Matrix& m, int mode);

/// t x_1 a x_2 b x_3 c.
Tensor3 multilinear_product(const Tensor3& t, const Matrix& a, const Matrix& b, const Matrix& c);

/// t x_1 a^T x_2 b^T x_3 c^T.
Tensor3 multilinear_product_transposed(const Tensor3& t, const Matrix& a, const Matrix& b,
                                       const Matrix& c);

// ---------------------------------------------------------------------------
// Inner products and norms
// ---------------------------------------------------------------------------

double inner(const Tensor3& a, const Tensor3& b);
double inner(const Tensor4& a, const Tensor4& b);

double frobenius_sq(const Tensor3& t);
double frobenius_sq(const Tensor4& t);
double frobenius(const Tensor3& t);
double frobenius(const Tensor4& t);

double l1(const Tensor3& t);

/// sum_j w_j ||g_j||_1.
double weighted_l1(const Tensor4& g, std::span<const double> w);

/// sum over mode-1 fibers of ||fiber||_2^p. Zero fibers contribute 0.
double l2p_pow(const Tensor3& t, double p);

/// (l2p_pow)^(1/p).
double l2p(const Tensor3& t, double p);

}  // namespace nltl2p

#include "nltl2p/tensor.hpp"

#include "nltl2p/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nltl2p {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

void check_mode(int mode) {
    if (mode < 1 || mode > 3) {
        throw UsageError("mode must be 1, 2 or 3 (got " + std::to_string(mode) + ")");
    }
}

std::size_t product(const Dims3& d) { return d[0] * d[1] * d[2]; }

void check_same_dims(const Dims3& a, const Dims3& b, const char* what) {
    if (a != b) {
        throw UsageError(std::string(what) + ": dimension mismatch");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor3
// ---------------------------------------------------------------------------

Tensor3::Tensor3(Dims3 dims, double fill) : dims_(dims), data_(product(dims), fill) {}

Tensor3::Tensor3(Dims3 dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
    if (data_.size() != product(dims_)) {
        throw UsageError("Tensor3: data length " + std::to_string(data_.size()) +
                         " does not match dims product " + std::to_string(product(dims_)));
    }
}

std::size_t Tensor3::dim(int mode) const {
    check_mode(mode);
    return dims_[static_cast<std::size_t>(mode - 1)];
}

std::span<double> Tensor3::fiber(std::size_t i2, std::size_t i3) noexcept {
    return std::span<double>(data_).subspan(dims_[0] * (i2 + dims_[1] * i3), dims_[0]);
}

std::span<const double> Tensor3::fiber(std::size_t i2, std::size_t i3) const noexcept {
    return std::span<const double>(data_).subspan(dims_[0] * (i2 + dims_[1] * i3), dims_[0]);
}

Eigen::Map<Matrix> Tensor3::mode1() noexcept {
    return {data_.data(), static_cast<Eigen::Index>(dims_[0]),
            static_cast<Eigen::Index>(dims_[1] * dims_[2])};
}

Eigen::Map<const Matrix> Tensor3::mode1() const noexcept {
    return {data_.data(), static_cast<Eigen::Index>(dims_[0]),
            static_cast<Eigen::Index>(dims_[1] * dims_[2])};
}

void Tensor3::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool Tensor3::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
    check_same_dims(dims_, other.dims_, "Tensor3 +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
    check_same_dims(dims_, other.dims_, "Tensor3 -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor3& Tensor3::operator*=(double scale) noexcept {
    for (double& v : data_) v *= scale;
    return *this;
}

Tensor3 hadamard(const Tensor3& a, const Tensor3& b) {
    check_same_dims(a.dims(), b.dims(), "hadamard");
    Tensor3 out(a.dims());
    auto o = out.data();
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
    return out;
}

// ---------------------------------------------------------------------------
// Tensor4
// ---------------------------------------------------------------------------

Tensor4::Tensor4(Dims3 slab_dims, std::size_t count, double fill)
    : slab_dims_(slab_dims), slabs_(count, Tensor3(slab_dims, fill)) {}

Tensor4::Tensor4(std::vector<Tensor3> slabs) : slabs_(std::move(slabs)) {
    if (!slabs_.empty()) {
        slab_dims_ = slabs_.front().dims();
        for (const auto& s : slabs_) check_same_dims(s.dims(), slab_dims_, "Tensor4 slabs");
    }
}

Tensor4& Tensor4::operator+=(const Tensor4& other) {
    if (count() != other.count()) throw UsageError("Tensor4 +=: slab count mismatch");
    for (std::size_t j = 0; j < slabs_.size(); ++j) slabs_[j] += other.slabs_[j];
    return *this;
}

Tensor4& Tensor4::operator-=(const Tensor4& other) {
    if (count() != other.count()) throw UsageError("Tensor4 -=: slab count mismatch");
    for (std::size_t j = 0; j < slabs_.size(); ++j) slabs_[j] -= other.slabs_[j];
    return *this;
}

Tensor4& Tensor4::operator*=(double scale) noexcept {
    for (auto& s : slabs_) s *= scale;
    return *this;
}

// ---------------------------------------------------------------------------
// FactorStack
// ---------------------------------------------------------------------------

FactorStack::FactorStack(std::size_t rows, std::size_t cols, std::size_t count)
    : rows_(rows), cols_(cols),
      mats_(count, Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {
}

FactorStack::FactorStack(std::vector<Matrix> mats) : mats_(std::move(mats)) {
    if (!mats_.empty()) {
        rows_ = static_cast<std::size_t>(mats_.front().rows());
        cols_ = static_cast<std::size_t>(mats_.front().cols());
        for (const auto& m : mats_) {
            if (static_cast<std::size_t>(m.rows()) != rows_ ||
                static_cast<std::size_t>(m.cols()) != cols_) {
                throw UsageError("FactorStack: inconsistent matrix shapes");
            }
        }
    }
}

double FactorStack::orthonormality_error() const {
    double worst = 0.0;
    for (const auto& x : mats_) {
        const Matrix gram = x.transpose() * x;
        worst = std::max(worst, (gram - Matrix::Identity(gram.rows(), gram.cols())).norm());
    }
    return worst;
}

double FactorStack::frobenius() const {
    double s = 0.0;
    for (const auto& x : mats_) s += x.squaredNorm();
    return std::sqrt(s);
}

FactorStack operator-(const FactorStack& a, const FactorStack& b) {
    if (a.count() != b.count() || a.rows() != b.rows() || a.cols() != b.cols()) {
        throw UsageError("FactorStack -: shape mismatch");
    }
    std::vector<Matrix> out;
    out.reserve(a.count());
    for (std::size_t j = 0; j < a.count(); ++j) out.emplace_back(a[j] - b[j]);
    return FactorStack(std::move(out));
}

// ---------------------------------------------------------------------------
// Unfolding
// ---------------------------------------------------------------------------

Matrix unfold(const Tensor3& t, int mode) {
    check_mode(mode);
    const auto [n1, n2, n3] = t.dims();
    const auto i1s = static_cast<Eigen::Index>(n1);
    const auto i2s = static_cast<Eigen::Index>(n2);
    const auto i3s = static_cast<Eigen::Index>(n3);
    switch (mode) {
        case 1:
            return t.mode1();
        case 2: {
            // column j = i1 + I1 * i3
            Matrix out(i2s, i1s * i3s);
            for (Eigen::Index k = 0; k < i3s; ++k) {
                ConstMap slice(t.data().data() + n1 * n2 * static_cast<std::size_t>(k), i1s, i2s);
                out.middleCols(k * i1s, i1s) = slice.transpose();
            }
            return out;
        }
        default: {
            // column j = i1 + I1 * i2
            ConstMap flat(t.data().data(), i1s * i2s, i3s);
            return flat.transpose();
        }
    }
}

Tensor3 fold(const Matrix& m, int mode, const Dims3& dims) {
    check_mode(mode);
    const std::size_t k = static_cast<std::size_t>(mode - 1);
    const std::size_t rest = product(dims) / std::max<std::size_t>(dims[k], 1);
    if (static_cast<std::size_t>(m.rows()) != dims[k] || static_cast<std::size_t>(m.cols()) != rest) {
        throw UsageError("fold: matrix shape " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " inconsistent with dims for mode " +
                         std::to_string(mode));
    }
    Tensor3 out(dims);
    const auto i1s = static_cast<Eigen::Index>(dims[0]);
    const auto i2s = static_cast<Eigen::Index>(dims[1]);
    const auto i3s = static_cast<Eigen::Index>(dims[2]);
    switch (mode) {
        case 1:
            out.mode1() = m;
            break;
        case 2:
            for (Eigen::Index s = 0; s < i3s; ++s) {
                MutMap slice(out.data().data() + dims[0] * dims[1] * static_cast<std::size_t>(s), i1s,
                             i2s);
                slice = m.middleCols(s * i1s, i1s).transpose();
            }
            break;
        default: {
            MutMap flat(out.data().data(), i1s * i2s, i3s);
            flat = m.transpose();
            break;
        }
    }
    return out;
}

Tensor3 mode_product(const Tensor3& t, const Matrix& m, int mode) {
    check_mode(mode);
    const std::size_t k = static_cast<std::size_t>(mode - 1);
    const auto dims = t.dims();
    if (static_cast<std::size_t>(m.cols()) != dims[k]) {
        throw UsageError("mode_product: matrix has " + std::to_string(m.cols()) +
                         " columns but mode-" + std::to_string(mode) + " dimension is " +
                         std::to_string(dims[k]));
    }
    Dims3 out_dims = dims;
    out_dims[k] = static_cast<std::size_t>(m.rows());
    Tensor3 out(out_dims);
    const auto i1s = static_cast<Eigen::Index>(dims[0]);
    const auto i2s = static_cast<Eigen::Index>(dims[1]);
    const auto i3s = static_cast<Eigen::Index>(dims[2]);
    switch (mode) {
        case 1:
            out.mode1().noalias() = m * t.mode1();
            break;
        case 2: {
            const auto j = m.rows();
            for (Eigen::Index s = 0; s < i3s; ++s) {
                ConstMap in(t.data().data() + dims[0] * dims[1] * static_cast<std::size_t>(s), i1s,
                            i2s);
                MutMap o(out.data().data() + dims[0] * out_dims[1] * static_cast<std::size_t>(s), i1s,
                         j);
                o.noalias() = in * m.transpose();
            }
            break;
        }
        default: {
            ConstMap in(t.data().data(), i1s * i2s, i3s);
            MutMap o(out.data().data(), i1s * i2s, m.rows());
            o.noalias() = in * m.transpose();
            break;
        }
    }
    return out;
}

Tensor3 multilinear_product(const Tensor3& t, const Matrix& a, const Matrix& b, const Matrix& c) {
    return mode_product(mode_product(mode_product(t, a, 1), b, 2), c, 3);
}

Tensor3 multilinear_product_transposed(const Tensor3& t, const Matrix& a, const Matrix& b,
                                       const Matrix& c) {
    return mode_product(mode_product(mode_product(t, a.transpose(), 1), b.transpose(), 2),
                        c.transpose(), 3);
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

double inner(const Tensor3& a, const Tensor3& b) {
    check_same_dims(a.dims(), b.dims(), "inner");
    auto x = a.data();
    auto y = b.data();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double inner(const Tensor4& a, const Tensor4& b) {
    if (a.count() != b.count()) throw UsageError("inner: slab count mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < a.count(); ++j) s += inner(a[j], b[j]);
    return s;
}

double frobenius_sq(const Tensor3& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    return s;
}

double frobenius_sq(const Tensor4& t) {
    double s = 0.0;
    for (const auto& slab : t) s += frobenius_sq(slab);
    return s;
}

double frobenius(const Tensor3& t) { return std::sqrt(frobenius_sq(t)); }
double frobenius(const Tensor4& t) { return std::sqrt(frobenius_sq(t)); }

double l1(const Tensor3& t) {
    double s = 0.0;
    for (double v : t.data()) s += std::abs(v);
    return s;
}

double weighted_l1(const Tensor4& g, std::span<const double> w) {
    if (w.size() != g.count()) {
        throw UsageError("weighted_l1: weight vector length " + std::to_string(w.size()) +
                         " does not match slab count " + std::to_string(g.count()));
    }
    double s = 0.0;
    for (std::size_t j = 0; j < g.count(); ++j) {
        if (w[j] < 0.0) throw UsageError("weighted_l1: weights must be nonnegative");
        s += w[j] * l1(g[j]);
    }
    return s;
}

double l2p_pow(const Tensor3& t, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw UsageError("l2p: p must lie in (0, 1) (got " + std::to_string(p) + ")");
    }
    const auto [n1, n2, n3] = t.dims();
    double s = 0.0;
    for (std::size_t k = 0; k < n3; ++k) {
        for (std::size_t j = 0; j < n2; ++j) {
            double sq = 0.0;
            for (double v : t.fiber(j, k)) sq += v * v;
            if (sq > 0.0) s += std::pow(sq, 0.5 * p);
        }
    }
    (void)n1;
    return s;
}

double l2p(const Tensor3& t, double p) { return std::pow(l2p_pow(t, p), 1.0 / p); }

}  // namespace nltl2p

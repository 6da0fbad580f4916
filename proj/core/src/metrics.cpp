#include "nltl2p/metrics.hpp"

#include "nltl2p/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <sstream>

namespace nltl2p {

namespace {

void check_pair(const Tensor3& a, const Tensor3& b) {
    if (a.dims() != b.dims()) throw UsageError("metrics: restored and clean dims differ");
    if (a.size() == 0) throw UsageError("metrics: empty tensors");
}

std::array<double, kSsimWindow> gaussian_kernel() {
    std::array<double, kSsimWindow> k{};
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double x = i - half;
        k[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Valid-mode separable Gaussian filtering of an n1 x n2 image given as a
/// lambda over (i, j).
template <typename F>
Matrix filter_valid(std::size_t n1, std::size_t n2, const std::array<double, kSsimWindow>& k, F&& at) {
    const std::size_t w = kSsimWindow;
    const std::size_t o1 = n1 - w + 1;
    const std::size_t o2 = n2 - w + 1;
    Matrix rows(static_cast<Eigen::Index>(o1), static_cast<Eigen::Index>(n2));
    for (std::size_t j = 0; j < n2; ++j) {
        for (std::size_t i = 0; i < o1; ++i) {
            double s = 0.0;
            for (std::size_t t = 0; t < w; ++t) s += k[t] * at(i + t, j);
            rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
        }
    }
    Matrix out(static_cast<Eigen::Index>(o1), static_cast<Eigen::Index>(o2));
    for (std::size_t j = 0; j < o2; ++j) {
        for (std::size_t i = 0; i < o1; ++i) {
            double s = 0.0;
            for (std::size_t t = 0; t < w; ++t) {
                s += k[t] * rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + t));
            }
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
        }
    }
    return out;
}

}  // namespace

PsnrResult mpsnr(const Tensor3& restored, const Tensor3& clean, const MetricOptions& options) {
    check_pair(restored, clean);
    const auto [n1, n2, n3] = restored.dims();
    const double pixels = static_cast<double>(n1 * n2);
    PsnrResult out;
    out.per_band.reserve(n3);
    for (std::size_t k = 0; k < n3; ++k) {
        double sq = 0.0;
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n2; ++j) {
            for (std::size_t i = 0; i < n1; ++i) {
                const double d = restored(i, j, k) - clean(i, j, k);
                sq += d * d;
                peak = std::max(peak, options.peak == PsnrPeak::Restored ? restored(i, j, k) : clean(i, j, k));
            }
        }
        const double mse = sq / pixels;
        out.per_band.push_back(mse == 0.0 ? options.psnr_cap_db : 10.0 * std::log10(peak * peak / mse));
    }
    double sum = 0.0;
    for (double v : out.per_band) sum += v;
    out.mean = sum / static_cast<double>(n3);
    return out;
}

double band_ssim(const Tensor3& restored, const Tensor3& clean, std::size_t band, const MetricOptions& options) {
    check_pair(restored, clean);
    const auto [n1, n2, n3] = restored.dims();
    if (band >= n3) throw UsageError("band_ssim: band index out of range");
    if (n1 < static_cast<std::size_t>(kSsimWindow) || n2 < static_cast<std::size_t>(kSsimWindow)) {
        throw UsageError("SSIM needs bands of at least 11 x 11 pixels");
    }
    static const auto kernel = gaussian_kernel();
    const auto x = [&](std::size_t i, std::size_t j) { return restored(i, j, band); };
    const auto y = [&](std::size_t i, std::size_t j) { return clean(i, j, band); };
    const Matrix mx = filter_valid(n1, n2, kernel, x);
    const Matrix my = filter_valid(n1, n2, kernel, y);
    const Matrix sxx = filter_valid(n1, n2, kernel, [&](std::size_t i, std::size_t j) { return x(i, j) * x(i, j); });
    const Matrix syy = filter_valid(n1, n2, kernel, [&](std::size_t i, std::size_t j) { return y(i, j) * y(i, j); });
    const Matrix sxy = filter_valid(n1, n2, kernel, [&](std::size_t i, std::size_t j) { return x(i, j) * y(i, j); });

    const double c1 = std::pow(kSsimK1 * options.dynamic_range, 2);
    const double c2 = std::pow(kSsimK2 * options.dynamic_range, 2);
    double total = 0.0;
    for (Eigen::Index j = 0; j < mx.cols(); ++j) {
        for (Eigen::Index i = 0; i < mx.rows(); ++i) {
            const double ux = mx(i, j);
            const double uy = my(i, j);
            const double vx = sxx(i, j) - ux * ux;
            const double vy = syy(i, j) - uy * uy;
            const double cxy = sxy(i, j) - ux * uy;
            total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
    }
    return total / static_cast<double>(mx.size());
}

double mssim(const Tensor3& restored, const Tensor3& clean, const MetricOptions& options) {
    check_pair(restored, clean);
    const std::size_t n3 = restored.dims()[2];
    double sum = 0.0;
    for (std::size_t k = 0; k < n3; ++k) sum += band_ssim(restored, clean, k, options);
    return sum / static_cast<double>(n3);
}

double ergas(const Tensor3& restored, const Tensor3& clean) {
    check_pair(restored, clean);
    const auto [n1, n2, n3] = restored.dims();
    const double pixels = static_cast<double>(n1 * n2);
    double acc = 0.0;
    for (std::size_t k = 0; k < n3; ++k) {
        double sq = 0.0;
        double mean = 0.0;
        for (std::size_t j = 0; j < n2; ++j) {
            for (std::size_t i = 0; i < n1; ++i) {
                const double d = restored(i, j, k) - clean(i, j, k);
                sq += d * d;
                mean += restored(i, j, k);
            }
        }
        mean /= pixels;
        if (mean == 0.0) throw UsageError("ERGAS: restored band " + std::to_string(k) + " has zero mean");
        acc += (sq / pixels) / mean;
    }
    return 100.0 * std::sqrt(acc / static_cast<double>(n3));
}

MetricReport evaluate(const Tensor3& restored, const Tensor3& clean, const MetricOptions& options) {
    MetricReport r;
    auto psnr = mpsnr(restored, clean, options);
    r.mpsnr = psnr.mean;
    r.per_band_psnr = std::move(psnr.per_band);
    const std::size_t n3 = restored.dims()[2];
    r.per_band_ssim.reserve(n3);
    double sum = 0.0;
    for (std::size_t k = 0; k < n3; ++k) {
        r.per_band_ssim.push_back(band_ssim(restored, clean, k, options));
        sum += r.per_band_ssim.back();
    }
    r.mssim = sum / static_cast<double>(n3);
    r.ergas = ergas(restored, clean);
    return r;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["mpsnr"] = report.mpsnr;
    j["mssim"] = report.mssim;
    j["mfsim"] = nullptr;
    j["ergas"] = report.ergas;
    j["per_band_psnr"] = report.per_band_psnr;
    j["per_band_ssim"] = report.per_band_ssim;
    return j.dump(2);
}

std::string report_to_csv_row(const std::string& name, const MetricReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << name << ',' << report.mpsnr << ',' << report.mssim << ',' << report.ergas;
    return out.str();
}

}  // namespace nltl2p

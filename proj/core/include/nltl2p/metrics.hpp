#pragma once

#include "nltl2p/tensor.hpp"

#include <string>
#include <vector>

namespace nltl2p {

enum class PsnrPeak {
    Restored,  // max of the restored band (the formula this project reports by default)
    Clean,     // max of the clean band
};

struct MetricOptions {
    double psnr_cap_db = 100.0;  // PSNR of a band with zero error
    PsnrPeak peak = PsnrPeak::Restored;
    double dynamic_range = 1.0;  // SSIM L
};

/// Gaussian-window SSIM constants: 11 x 11 window, sigma 1.5, K1 = 0.01, K2 = 0.03.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

struct MetricReport {
    double mpsnr = 0.0;
    double mssim = 0.0;
    double ergas = 0.0;
    std::vector<double> per_band_psnr;
    std::vector<double> per_band_ssim;
};

struct PsnrResult {
    double mean = 0.0;
    std::vector<double> per_band;
};

/// Band-averaged PSNR, 10 log10(peak^2 / mse) per band.
PsnrResult mpsnr(const Tensor3& restored, const Tensor3& clean, const MetricOptions& options = {});

/// SSIM of one band, averaged over all fully contained 11 x 11 windows.
double band_ssim(const Tensor3& restored, const Tensor3& clean, std::size_t band,
                 const MetricOptions& options = {});

/// Band-averaged SSIM. Throws UsageError if a band is smaller than 11 x 11.
double mssim(const Tensor3& restored, const Tensor3& clean, const MetricOptions& options = {});

/// 100 sqrt(mean_b(mse_b / mean(restored_b))). Throws UsageError naming the
/// band when a restored band has zero mean.
double ergas(const Tensor3& restored, const Tensor3& clean);

MetricReport evaluate(const Tensor3& restored, const Tensor3& clean, const MetricOptions& options = {});

/// {"mpsnr":..,"mssim":..,"mfsim":null,"ergas":..,"per_band_psnr":[..],"per_band_ssim":[..]}
std::string report_to_json(const MetricReport& report);

inline constexpr const char* kMetricCsvHeader = "name,mpsnr,mssim,ergas";
std::string report_to_csv_row(const std::string& name, const MetricReport& report);

}  // namespace nltl2p

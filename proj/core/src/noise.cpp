#include "nltl2p/noise.hpp"

#include "nltl2p/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>

namespace nltl2p {

namespace {

enum Stream : std::uint64_t {
    kGaussian = 1,
    kStripes = 2,
    kDeadlines = 3,
    kStripeBands = 4,
    kDeadlineBands = 5,
};

std::vector<std::size_t> choose_distinct(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

void check_density(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError(std::string("noise: ") + name + " must lie in [0, 1]");
}

void check_sigma(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError(std::string("noise: ") + name + " must be >= 0");
}

std::size_t column_count(double density, std::size_t columns) {
    return static_cast<std::size_t>(std::floor(density * static_cast<double>(columns) + 1e-12));
}

}  // namespace

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw UsageError("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::size_t> BandRule::resolve(std::size_t band_count, std::uint64_t seed) const {
    switch (kind) {
        case BandSelection::All: {
            std::vector<std::size_t> out(band_count);
            std::iota(out.begin(), out.end(), std::size_t{0});
            return out;
        }
        case BandSelection::List: {
            std::vector<std::size_t> out = bands;
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            if (!out.empty() && out.back() >= band_count) {
                throw UsageError("noise: band index " + std::to_string(out.back()) + " out of range");
            }
            return out;
        }
        case BandSelection::RandomFraction: {
            check_density(fraction, "band fraction");
            const auto k = static_cast<std::size_t>(
                std::ceil(fraction * static_cast<double>(band_count) - 1e-12));
            Rng rng(seed);
            return choose_distinct(band_count, std::min(k, band_count), rng);
        }
    }
    return {};
}

void NoiseSpec::validate() const {
    check_sigma(gaussian_sigma, "gaussian_sigma");
    check_sigma(stripe_sigma, "stripe_sigma");
    check_density(stripe_density, "stripe_density");
    check_density(deadline_density, "deadline_density");
    if (stripe_bands.kind == BandSelection::RandomFraction) check_density(stripe_bands.fraction, "stripe fraction");
    if (deadline_bands.kind == BandSelection::RandomFraction) {
        check_density(deadline_bands.fraction, "deadline fraction");
    }
}

Tensor3 gaussian_sample(const Dims3& dims, double sigma, std::uint64_t seed) {
    check_sigma(sigma, "sigma");
    Tensor3 out(dims);
    if (sigma == 0.0) return out;
    Rng rng(seed);
    for (double& v : out.data()) v = sigma * rng.normal();
    return out;
}

Tensor3 add_gaussian(const Tensor3& clean, double sigma, std::uint64_t seed) {
    if (sigma == 0.0) {
        check_sigma(sigma, "sigma");
        return clean;
    }
    return clean + gaussian_sample(clean.dims(), sigma, seed);
}

StructuredNoise add_stripes(const Tensor3& t, const NoiseSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto [n1, n2, n3] = t.dims();
    StructuredNoise out{t, Tensor3(t.dims()), {}};
    const std::size_t k = column_count(spec.stripe_density, n2);
    // Resolve first so an invalid band rule is reported even when no column is hit.
    auto bands = spec.stripe_bands.resolve(n3, derive_seed(seed, kStripeBands));
    if (k == 0) return out;
    out.bands = std::move(bands);
    for (std::size_t band : out.bands) {
        Rng rng(derive_seed(derive_seed(seed, kStripes), band));
        for (std::size_t col : choose_distinct(n2, k, rng)) {
            const double offset = spec.stripe_sigma * rng.normal();
            auto comp = out.component.fiber(col, band);
            auto dst = out.corrupted.fiber(col, band);
            for (std::size_t i = 0; i < n1; ++i) {
                comp[i] = offset;
                dst[i] += offset;
            }
        }
    }
    return out;
}

StructuredNoise add_deadlines(const Tensor3& t, const NoiseSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto [n1, n2, n3] = t.dims();
    StructuredNoise out{t, Tensor3(t.dims()), {}};
    const std::size_t k = column_count(spec.deadline_density, n2);
    // Resolve first so an invalid band rule is reported even when no column is hit.
    auto bands = spec.deadline_bands.resolve(n3, derive_seed(seed, kDeadlineBands));
    if (k == 0) return out;
    out.bands = std::move(bands);
    for (std::size_t band : out.bands) {
        Rng rng(derive_seed(derive_seed(seed, kDeadlines), band));
        for (std::size_t col : choose_distinct(n2, k, rng)) {
            auto comp = out.component.fiber(col, band);
            auto dst = out.corrupted.fiber(col, band);
            for (std::size_t i = 0; i < n1; ++i) {
                comp[i] = -dst[i];
                dst[i] = 0.0;
            }
        }
    }
    return out;
}

NoiseSpec case_spec(int case_id, std::size_t band_count, std::uint64_t seed) {
    NoiseSpec spec;
    spec.seed = seed;
    switch (case_id) {
        case 1:
            spec.gaussian_sigma = 0.1;
            spec.stripe_bands = {BandSelection::All, {}, 0.0};
            spec.stripe_density = 0.3;
            spec.stripe_sigma = 0.2;
            break;
        case 2: {
            spec.gaussian_sigma = 0.1;
            spec.stripe_density = 0.2;
            spec.stripe_sigma = 0.2;
            // Bands 11-40, 71-100, 121-128 of a 128-band cube (1-based, inclusive),
            // rescaled to band_count.
            constexpr std::array<std::array<double, 2>, 3> ranges{{{11, 40}, {71, 100}, {121, 128}}};
            const double scale = static_cast<double>(band_count) / 128.0;
            std::vector<std::size_t> bands;
            for (const auto& r : ranges) {
                const auto lo = static_cast<long>(std::lround((r[0] - 1.0) * scale));
                const auto hi = static_cast<long>(std::lround(r[1] * scale));
                for (long b = lo; b < hi && b < static_cast<long>(band_count); ++b) {
                    bands.push_back(static_cast<std::size_t>(b));
                }
            }
            spec.stripe_bands = {BandSelection::List, std::move(bands), 0.0};
            break;
        }
        case 3:
            spec.gaussian_sigma = 0.2;
            spec.deadline_bands = {BandSelection::RandomFraction, {}, 0.25};
            spec.deadline_density = 0.05;
            break;
        default:
            throw UsageError("noise: case must be 1, 2 or 3 (got " + std::to_string(case_id) + ")");
    }
    return spec;
}

SimulatedNoise simulate(const Tensor3& clean, const NoiseSpec& spec) {
    spec.validate();
    SimulatedNoise out;
    out.spec = spec;
    out.gaussian = gaussian_sample(clean.dims(), spec.gaussian_sigma, derive_seed(spec.seed, kGaussian));
    const Tensor3 with_gaussian = clean + out.gaussian;
    auto striped = add_stripes(with_gaussian, spec, spec.seed);
    auto dead = add_deadlines(striped.corrupted, spec, spec.seed);
    out.stripes = std::move(striped.component);
    out.stripe_bands = std::move(striped.bands);
    out.deadlines = std::move(dead.component);
    out.deadline_bands = std::move(dead.bands);
    out.noisy = std::move(dead.corrupted);
    return out;
}

SimulatedNoise apply_case(const Tensor3& clean, int case_id, std::uint64_t seed) {
    return simulate(clean, case_spec(case_id, clean.dims()[2], seed));
}

}  // namespace nltl2p

#pragma once

#include "nltl2p/tensor.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace nltl2p {

/// Portable seeded generator: std::mt19937_64 (bit-exact across standard
/// libraries) with hand-rolled uniform, index and Box-Muller normal draws,
/// since the std distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal.
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 mix of (seed, stream): independent sub-seeds per purpose and band.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

enum class BandSelection { All, List, RandomFraction };

struct BandRule {
    BandSelection kind = BandSelection::All;
    std::vector<std::size_t> bands;  // 0-based, for BandSelection::List
    double fraction = 0.0;           // for BandSelection::RandomFraction: ceil(fraction * I3) bands

    /// Resolve to a sorted list of 0-based band indices.
    std::vector<std::size_t> resolve(std::size_t band_count, std::uint64_t seed) const;
};

struct NoiseSpec {
    double gaussian_sigma = 0.0;
    BandRule stripe_bands{};
    double stripe_density = 0.0;  // fraction of columns (mode-2 positions) per affected band
    double stripe_sigma = 0.0;
    BandRule deadline_bands{BandSelection::RandomFraction, {}, 0.0};
    double deadline_density = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// sigma * N(0, 1) i.i.d. samples.
Tensor3 gaussian_sample(const Dims3& dims, double sigma, std::uint64_t seed);

/// clean + gaussian_sample(dims, sigma, seed).
Tensor3 add_gaussian(const Tensor3& clean, double sigma, std::uint64_t seed);

struct StructuredNoise {
    Tensor3 corrupted;
    Tensor3 component;  // input + component == corrupted, bitwise
    std::vector<std::size_t> bands;
};

/// Per affected band, floor(density * I2) distinct columns each receive a
/// constant N(0, stripe_sigma^2) offset along the whole mode-1 fiber.
StructuredNoise add_stripes(const Tensor3& t, const NoiseSpec& spec, std::uint64_t seed);

/// Per affected band, floor(density * I2) distinct columns are zeroed.
StructuredNoise add_deadlines(const Tensor3& t, const NoiseSpec& spec, std::uint64_t seed);

/// The three simulated degradation settings, scaled to the cube's band count.
NoiseSpec case_spec(int case_id, std::size_t band_count, std::uint64_t seed);

struct SimulatedNoise {
    Tensor3 noisy;
    Tensor3 gaussian;   // Gaussian component
    Tensor3 stripes;    // stripe component (zero if none)
    Tensor3 deadlines;  // dead-line component (zero if none)
    std::vector<std::size_t> stripe_bands;
    std::vector<std::size_t> deadline_bands;
    NoiseSpec spec;
};

/// Gaussian noise, then stripes, then dead lines. The decomposition
/// ((clean + gaussian) + stripes) + deadlines reproduces `noisy` exactly.
SimulatedNoise simulate(const Tensor3& clean, const NoiseSpec& spec);

/// simulate(clean, case_spec(case_id, I3, seed)).
SimulatedNoise apply_case(const Tensor3& clean, int case_id, std::uint64_t seed);

}  // namespace nltl2p

#pragma once

#include "nltl2p/noise.hpp"
#include "nltl2p/solver.hpp"
#include "nltl2p/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace nltl2p {

/// NLT3 container layout (all integers little-endian):
///   bytes 0-3   magic "NLT3"
///   bytes 4-5   u16 version (1)
///   bytes 6-17  u32 I1, I2, I3
///   bytes 18-19 u16 dtype (1 = float64 little-endian)
///   payload     I1 * I2 * I3 values in storage order (first index fastest)
inline constexpr std::uint16_t kHsiVersion = 1;
inline constexpr std::uint16_t kHsiDtypeF64 = 1;
inline constexpr std::size_t kHsiHeaderBytes = 20;

void write_hsi(const Tensor3& t, std::ostream& out);
void write_hsi(const Tensor3& t, const std::string& path);
Tensor3 read_hsi(std::istream& in);
Tensor3 read_hsi(const std::string& path);

enum class RawDtype { F64LE, F32LE, U16LE };

RawDtype parse_raw_dtype(const std::string& name);
std::size_t raw_dtype_bytes(RawDtype dtype);

/// Read a headerless cube stored in the same layout as NLT3 payloads.
/// Throws FormatError if the file size does not match dims and dtype.
Tensor3 import_raw(const std::string& path, const Dims3& dims, RawDtype dtype, bool normalize = false);

/// Per-cube min-max scaling to [0, 1]. Throws UsageError on a constant cube.
void normalize_minmax(Tensor3& t);

/// 64-bit FNV-1a over a file's bytes.
std::uint64_t file_checksum(const std::string& path);
std::string checksum_hex(std::uint64_t value);

struct RunPaths {
    std::string input;
    std::string output;
    std::string stripes_out;
    std::string diagnostics;
};

struct RunConfig {
    SolverConfig solver;
    std::optional<NoiseSpec> noise;
    RunPaths paths;
};

/// Parse and validate a run configuration document.
///
/// Top-level keys: "solver" (required), "noise", "paths". Unknown keys at any
/// level throw ConfigError naming the key; missing required keys throw
/// ConfigError naming the dotted path of the key. Required solver keys:
/// delta, gamma, p, weight, ranks, block_matching (with block_size, stride,
/// window, group_size). All other fields fall back to SolverConfig defaults.
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config);

std::string noise_spec_to_json(const NoiseSpec& spec);

}  // namespace nltl2p

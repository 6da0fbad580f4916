#include "nltl2p/io.hpp"

#include "nltl2p/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace nltl2p {

namespace {

using nlohmann::json;

template <typename U>
void put_le(std::string& buf, U value) {
    for (std::size_t b = 0; b < sizeof(U); ++b) {
        buf.push_back(static_cast<char>((value >> (8 * b)) & 0xFFu));
    }
}

template <typename U>
U get_le(const unsigned char* p) {
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(p[b]) << (8 * b);
    return v;
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw FormatError(std::string("NLT3: truncated ") + what);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!ok.contains(item.key())) {
            throw ConfigError("config: unknown key " + (where.empty() ? "" : where + ".") + item.key());
        }
    }
}

const json& require(const json& obj, const std::string& where, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError("config: missing key " + (where.empty() ? "" : where + ".") + key);
    }
    return *it;
}

template <typename T>
T as(const json& value, const std::string& name) {
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!value.is_number_unsigned()) throw ConfigError("config: " + name + " must be a nonnegative integer");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!value.is_boolean()) throw ConfigError("config: " + name + " must be a boolean");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!value.is_number()) throw ConfigError("config: " + name + " must be a number");
        }
        return value.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: " + name + " has the wrong type");
    }
}

template <typename T>
void optional_field(const json& obj, const std::string& where, const char* key, T& target) {
    if (const auto it = obj.find(key); it != obj.end()) target = as<T>(*it, where + "." + key);
}

BandRule parse_band_rule(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "bands", "fraction"});
    BandRule rule;
    const auto kind = as<std::string>(require(j, where, "kind"), where + ".kind");
    if (kind == "all") {
        rule.kind = BandSelection::All;
    } else if (kind == "list") {
        rule.kind = BandSelection::List;
        const json& bands = require(j, where, "bands");
        if (!bands.is_array()) throw ConfigError("config: " + where + ".bands must be an array");
        for (const auto& b : bands) rule.bands.push_back(as<std::size_t>(b, where + ".bands"));
    } else if (kind == "fraction") {
        rule.kind = BandSelection::RandomFraction;
        rule.fraction = as<double>(require(j, where, "fraction"), where + ".fraction");
    } else {
        throw ConfigError("config: " + where + ".kind must be all, list or fraction");
    }
    return rule;
}

json band_rule_json(const BandRule& rule) {
    switch (rule.kind) {
        case BandSelection::All:
            return {{"kind", "all"}};
        case BandSelection::List:
            return {{"kind", "list"}, {"bands", rule.bands}};
        case BandSelection::RandomFraction:
            return {{"kind", "fraction"}, {"fraction", rule.fraction}};
    }
    return {};
}

json noise_json(const NoiseSpec& s) {
    return {{"gaussian_sigma", s.gaussian_sigma},
            {"stripe_bands", band_rule_json(s.stripe_bands)},
            {"stripe_density", s.stripe_density},
            {"stripe_sigma", s.stripe_sigma},
            {"deadline_bands", band_rule_json(s.deadline_bands)},
            {"deadline_density", s.deadline_density},
            {"seed", s.seed}};
}

NoiseSpec parse_noise(const json& j) {
    const std::string w = "noise";
    check_keys(j, w,
               {"gaussian_sigma", "stripe_bands", "stripe_density", "stripe_sigma", "deadline_bands",
                "deadline_density", "seed"});
    NoiseSpec s;
    optional_field(j, w, "gaussian_sigma", s.gaussian_sigma);
    if (const auto it = j.find("stripe_bands"); it != j.end()) s.stripe_bands = parse_band_rule(*it, w + ".stripe_bands");
    optional_field(j, w, "stripe_density", s.stripe_density);
    optional_field(j, w, "stripe_sigma", s.stripe_sigma);
    if (const auto it = j.find("deadline_bands"); it != j.end()) {
        s.deadline_bands = parse_band_rule(*it, w + ".deadline_bands");
    }
    optional_field(j, w, "deadline_density", s.deadline_density);
    optional_field(j, w, "seed", s.seed);
    try {
        s.validate();
    } catch (const UsageError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

SolverConfig parse_solver(const json& j) {
    const std::string w = "solver";
    check_keys(j, w,
               {"delta", "gamma", "p", "weight", "weights", "alpha_s", "alpha_x", "alpha_g", "ranks", "block_matching",
                "max_outer_iters", "inner_xg_iters", "bm_refresh_iters", "rel_tol", "check_descent",
                "track_residuals"});
    SolverConfig c;
    c.delta = as<double>(require(j, w, "delta"), w + ".delta");
    c.gamma = as<double>(require(j, w, "gamma"), w + ".gamma");
    c.p = as<double>(require(j, w, "p"), w + ".p");
    c.weight = as<double>(require(j, w, "weight"), w + ".weight");
    if (const auto it = j.find("weights"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("config: solver.weights must be an array");
        for (const auto& v : *it) c.weights.push_back(as<double>(v, w + ".weights"));
    }
    optional_field(j, w, "alpha_s", c.alpha_s);
    optional_field(j, w, "alpha_x", c.alpha_x);
    optional_field(j, w, "alpha_g", c.alpha_g);

    const json& ranks = require(j, w, "ranks");
    if (!ranks.is_array() || ranks.size() != 3) throw ConfigError("config: solver.ranks must be an array of 3");
    for (std::size_t i = 0; i < 3; ++i) c.ranks[i] = as<std::size_t>(ranks[i], w + ".ranks");

    const std::string wb = w + ".block_matching";
    const json& bm = require(j, w, "block_matching");
    check_keys(bm, wb, {"block_size", "stride", "window", "group_size", "candidate_stride"});
    c.block_matching.block_size = as<std::size_t>(require(bm, wb, "block_size"), wb + ".block_size");
    c.block_matching.stride = as<std::size_t>(require(bm, wb, "stride"), wb + ".stride");
    c.block_matching.window = as<std::size_t>(require(bm, wb, "window"), wb + ".window");
    c.block_matching.group_size = as<std::size_t>(require(bm, wb, "group_size"), wb + ".group_size");
    optional_field(bm, wb, "candidate_stride", c.block_matching.candidate_stride);

    optional_field(j, w, "max_outer_iters", c.max_outer_iters);
    optional_field(j, w, "inner_xg_iters", c.inner_xg_iters);
    optional_field(j, w, "bm_refresh_iters", c.bm_refresh_iters);
    optional_field(j, w, "rel_tol", c.rel_tol);
    optional_field(j, w, "check_descent", c.check_descent);
    optional_field(j, w, "track_residuals", c.track_residuals);
    try {
        c.validate();
    } catch (const UsageError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

}  // namespace

void write_hsi(const Tensor3& t, std::ostream& out) {
    const auto& d = t.dims();
    for (std::size_t k = 0; k < 3; ++k) {
        if (d[k] > std::numeric_limits<std::uint32_t>::max()) throw UsageError("NLT3: dimension exceeds u32");
    }
    std::string buf;
    buf.reserve(kHsiHeaderBytes + 8 * t.size());
    buf.append("NLT3", 4);
    put_le<std::uint16_t>(buf, kHsiVersion);
    for (std::size_t k = 0; k < 3; ++k) put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(d[k]));
    put_le<std::uint16_t>(buf, kHsiDtypeF64);
    for (double v : t.data()) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("NLT3: write failed");
}

void write_hsi(const Tensor3& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write_hsi(t, out);
}

Tensor3 read_hsi(std::istream& in) {
    unsigned char header[kHsiHeaderBytes];
    read_exact(in, header, kHsiHeaderBytes, "header");
    if (std::memcmp(header, "NLT3", 4) != 0) throw FormatError("NLT3: bad magic");
    const auto version = get_le<std::uint16_t>(header + 4);
    if (version != kHsiVersion) throw FormatError("NLT3: unsupported version " + std::to_string(version));
    Dims3 dims{};
    for (std::size_t k = 0; k < 3; ++k) dims[k] = get_le<std::uint32_t>(header + 6 + 4 * k);
    const auto dtype = get_le<std::uint16_t>(header + 18);
    if (dtype != kHsiDtypeF64) throw FormatError("NLT3: unsupported dtype " + std::to_string(dtype));

    const std::size_t n = dims[0] * dims[1] * dims[2];
    std::vector<unsigned char> payload(8 * n);
    read_exact(in, payload.data(), payload.size(), "payload");
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("NLT3: trailing bytes after payload");
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = std::bit_cast<double>(get_le<std::uint64_t>(&payload[8 * i]));
    return Tensor3(dims, std::move(values));
}

Tensor3 read_hsi(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return read_hsi(in);
}

RawDtype parse_raw_dtype(const std::string& name) {
    if (name == "f64" || name == "float64") return RawDtype::F64LE;
    if (name == "f32" || name == "float32") return RawDtype::F32LE;
    if (name == "u16" || name == "uint16") return RawDtype::U16LE;
    throw UsageError("unknown raw dtype " + name + " (expected f64, f32 or u16)");
}

std::size_t raw_dtype_bytes(RawDtype dtype) {
    switch (dtype) {
        case RawDtype::F64LE:
            return 8;
        case RawDtype::F32LE:
            return 4;
        case RawDtype::U16LE:
            return 2;
    }
    return 0;
}

Tensor3 import_raw(const std::string& path, const Dims3& dims, RawDtype dtype, bool normalize) {
    const std::string bytes = read_file(path);
    const std::size_t n = dims[0] * dims[1] * dims[2];
    const std::size_t width = raw_dtype_bytes(dtype);
    if (bytes.size() != n * width) {
        throw FormatError("raw import: " + path + " has " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(n * width));
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (dtype) {
            case RawDtype::F64LE:
                values[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i));
                break;
            case RawDtype::F32LE:
                values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
                break;
            case RawDtype::U16LE:
                values[i] = get_le<std::uint16_t>(p + 2 * i);
                break;
        }
    }
    Tensor3 t(dims, std::move(values));
    if (!t.all_finite()) throw FormatError("raw import: non-finite values in " + path);
    if (normalize) normalize_minmax(t);
    return t;
}

void normalize_minmax(Tensor3& t) {
    if (t.empty()) throw UsageError("normalize: empty cube");
    const auto [lo, hi] = std::minmax_element(t.data().begin(), t.data().end());
    const double mn = *lo;
    const double range = *hi - mn;
    if (!(range > 0.0)) throw UsageError("normalize: constant cube");
    for (double& v : t.data()) v = (v - mn) / range;
}

std::uint64_t file_checksum(const std::string& path) {
    const std::string bytes = read_file(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string checksum_hex(std::uint64_t value) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << value;
    return out.str();
}

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "", {"solver", "noise", "paths"});
    RunConfig rc;
    rc.solver = parse_solver(require(j, "", "solver"));
    if (const auto it = j.find("noise"); it != j.end()) rc.noise = parse_noise(*it);
    if (const auto it = j.find("paths"); it != j.end()) {
        check_keys(*it, "paths", {"input", "output", "stripes_out", "diagnostics"});
        optional_field(*it, "paths", "input", rc.paths.input);
        optional_field(*it, "paths", "output", rc.paths.output);
        optional_field(*it, "paths", "stripes_out", rc.paths.stripes_out);
        optional_field(*it, "paths", "diagnostics", rc.paths.diagnostics);
    }
    return rc;
}

RunConfig read_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& config) {
    const SolverConfig& c = config.solver;
    json solver = {{"delta", c.delta},
                   {"gamma", c.gamma},
                   {"p", c.p},
                   {"weight", c.weight},
                   {"alpha_s", c.alpha_s},
                   {"alpha_x", c.alpha_x},
                   {"alpha_g", c.alpha_g},
                   {"ranks", {c.ranks[0], c.ranks[1], c.ranks[2]}},
                   {"block_matching",
                    {{"block_size", c.block_matching.block_size},
                     {"stride", c.block_matching.stride},
                     {"window", c.block_matching.window},
                     {"group_size", c.block_matching.group_size},
                     {"candidate_stride", c.block_matching.candidate_stride}}},
                   {"max_outer_iters", c.max_outer_iters},
                   {"inner_xg_iters", c.inner_xg_iters},
                   {"bm_refresh_iters", c.bm_refresh_iters},
                   {"rel_tol", c.rel_tol},
                   {"check_descent", c.check_descent},
                   {"track_residuals", c.track_residuals}};
    if (!c.weights.empty()) solver["weights"] = c.weights;
    json j = {{"solver", solver}};
    if (config.noise) j["noise"] = noise_json(*config.noise);
    json paths = json::object();
    if (!config.paths.input.empty()) paths["input"] = config.paths.input;
    if (!config.paths.output.empty()) paths["output"] = config.paths.output;
    if (!config.paths.stripes_out.empty()) paths["stripes_out"] = config.paths.stripes_out;
    if (!config.paths.diagnostics.empty()) paths["diagnostics"] = config.paths.diagnostics;
    if (!paths.empty()) j["paths"] = paths;
    return j.dump(2);
}

std::string noise_spec_to_json(const NoiseSpec& spec) { return noise_json(spec).dump(2); }

}  // namespace nltl2p

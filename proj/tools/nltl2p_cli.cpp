// nltl2p: simulate, denoise, evaluate, report and import hyperspectral cubes.
//
// Exit codes: 0 success, 2 usage or format error, 3 solver contract
// violation, 4 numerical failure.

#include "nltl2p/errors.hpp"
#include "nltl2p/io.hpp"
#include "nltl2p/metrics.hpp"
#include "nltl2p/noise.hpp"
#include "nltl2p/solver.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nltl2p;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitContract = 3;
constexpr int kExitNumerical = 4;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << text << '\n';
}

json band_list(const std::vector<std::size_t>& bands) {
    json a = json::array();
    for (auto b : bands) a.push_back(b);
    return a;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string input;
    std::string output;
    std::string components_dir;
    std::string noise_config;
    int case_id = 0;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
    const Tensor3 clean = read_hsi(a.input);
    const auto [lo, hi] = std::minmax_element(clean.data().begin(), clean.data().end());
    if (*lo < 0.0 || *hi > 1.0) std::cerr << "warning: input values outside [0, 1]; data is expected normalized\n";

    NoiseSpec spec;
    if (!a.noise_config.empty()) {
        if (a.case_id != 0) throw UsageError("simulate: pass either --case or --noise-config");
        const RunConfig rc = read_run_config(a.noise_config);
        if (!rc.noise) throw ConfigError("config: missing key noise");
        spec = *rc.noise;
        if (a.seed) spec.seed = *a.seed;
    } else {
        if (!a.seed) throw UsageError("simulate: --seed is required with --case");
        spec = case_spec(a.case_id, clean.dims()[2], *a.seed);
    }
    const SimulatedNoise sim = simulate(clean, spec);
    write_hsi(sim.noisy, a.output);

    if (!a.components_dir.empty()) {
        fs::create_directories(a.components_dir);
        const fs::path dir(a.components_dir);
        json files = json::object();
        const std::pair<const char*, const Tensor3*> parts[] = {
            {"gaussian.nlt", &sim.gaussian}, {"stripes.nlt", &sim.stripes}, {"deadlines.nlt", &sim.deadlines}};
        for (const auto& [name, t] : parts) {
            const std::string path = (dir / name).string();
            write_hsi(*t, path);
            files[name] = checksum_hex(file_checksum(path));
        }
        json manifest = {{"seed", spec.seed},
                         {"case", a.case_id == 0 ? json(nullptr) : json(a.case_id)},
                         {"dims", {clean.dims()[0], clean.dims()[1], clean.dims()[2]}},
                         {"spec", json::parse(noise_spec_to_json(spec))},
                         {"conventions",
                          {{"stripes", "constant N(0, stripe_sigma^2) offset per (column, band) along mode 1"},
                           {"deadlines", "column set to 0; component holds the subtracted values"},
                           {"rng", "mt19937_64, splitmix64 sub-seeds per stream"}}},
                         {"input", {{"path", a.input}, {"checksum", checksum_hex(file_checksum(a.input))}}},
                         {"output", {{"path", a.output}, {"checksum", checksum_hex(file_checksum(a.output))}}},
                         {"components", files},
                         {"stripe_bands", band_list(sim.stripe_bands)},
                         {"deadline_bands", band_list(sim.deadline_bands)}};
        write_text((dir / "manifest.json").string(), manifest.dump(2));
    }
    return kExitOk;
}

// ----------------------------------------------------------------- denoise

struct DenoiseArgs {
    std::string input;
    std::string config;
    std::string output;
    std::string stripes_out;
    std::string diagnostics;
};

int cmd_denoise(DenoiseArgs a) {
    const RunConfig rc = read_run_config(a.config);
    if (a.input.empty()) a.input = rc.paths.input;
    if (a.output.empty()) a.output = rc.paths.output;
    if (a.stripes_out.empty()) a.stripes_out = rc.paths.stripes_out;
    if (a.diagnostics.empty()) a.diagnostics = rc.paths.diagnostics;
    if (a.input.empty()) throw UsageError("denoise: no input (pass --input or paths.input)");
    if (a.output.empty()) throw UsageError("denoise: no output (pass --output or paths.output)");

    const Tensor3 noisy = read_hsi(a.input);
    const RunResult result = run(noisy, rc.solver);
    write_hsi(result.state.l, a.output);
    if (!a.stripes_out.empty()) write_hsi(result.state.s, a.stripes_out);
    if (!a.diagnostics.empty()) write_diagnostics_csv(result.diagnostics, a.diagnostics);
    std::cerr << "denoise: " << result.diagnostics.iterations.size() << " iterations, "
              << (result.diagnostics.converged ? "converged" : "iteration cap reached") << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string restored;
    std::string clean;
    std::string report;
    std::string csv;
    std::string batch_dir;
    std::string noisy;
    std::string components_dir;
    bool identity_check = false;
    double psnr_cap = 100.0;
    bool peak_clean = false;
};

MetricOptions metric_options(const EvaluateArgs& a) {
    MetricOptions o;
    o.psnr_cap_db = a.psnr_cap;
    o.peak = a.peak_clean ? PsnrPeak::Clean : PsnrPeak::Restored;
    return o;
}

int identity_check(const EvaluateArgs& a) {
    if (a.noisy.empty() || a.clean.empty() || a.components_dir.empty()) {
        throw UsageError("evaluate --identity-check needs --noisy, --clean and --components-dir");
    }
    const fs::path dir(a.components_dir);
    const Tensor3 noisy = read_hsi(a.noisy);
    const Tensor3 clean = read_hsi(a.clean);
    const Tensor3 g = read_hsi((dir / "gaussian.nlt").string());
    const Tensor3 s = read_hsi((dir / "stripes.nlt").string());
    const Tensor3 dl = read_hsi((dir / "deadlines.nlt").string());
    if (noisy.dims() != clean.dims() || g.dims() != clean.dims() || s.dims() != clean.dims() ||
        dl.dims() != clean.dims()) {
        throw UsageError("identity check: dims differ");
    }
    const Tensor3 sum = ((clean + g) + s) + dl;
    std::size_t mismatches = 0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        const double d = sum.data()[i] - noisy.data()[i];
        if (d != 0.0) ++mismatches;
        max_abs = std::max(max_abs, std::abs(d));
    }
    std::cout << "identity " << (mismatches == 0 ? "ok" : "FAILED") << " mismatches=" << mismatches
              << " max_abs=" << max_abs << '\n';
    return mismatches == 0 ? kExitOk : kExitContract;
}

int cmd_evaluate(const EvaluateArgs& a) {
    if (a.identity_check) return identity_check(a);
    const MetricOptions opts = metric_options(a);
    if (!a.batch_dir.empty()) {
        if (a.clean.empty()) throw UsageError("evaluate --batch-dir needs --clean");
        const Tensor3 clean = read_hsi(a.clean);
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(a.batch_dir)) {
            if (e.is_regular_file() && e.path().extension() == ".nlt") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::ostringstream csv;
        csv << kMetricCsvHeader << '\n';
        for (const auto& f : files) {
            const Tensor3 restored = read_hsi(f.string());
            csv << report_to_csv_row(f.filename().string(), evaluate(restored, clean, opts)) << '\n';
        }
        if (a.csv.empty()) {
            std::cout << csv.str();
        } else {
            std::ofstream out(a.csv, std::ios::trunc);
            if (!out) throw FormatError("cannot open " + a.csv + " for writing");
            out << csv.str();
        }
        return kExitOk;
    }
    if (a.restored.empty() || a.clean.empty()) throw UsageError("evaluate needs --restored and --clean");
    const Tensor3 restored = read_hsi(a.restored);
    const Tensor3 clean = read_hsi(a.clean);
    if (restored.dims() != clean.dims()) throw UsageError("evaluate: restored and clean dims differ");
    const MetricReport r = evaluate(restored, clean, opts);
    if (!a.report.empty()) write_text(a.report, report_to_json(r));
    if (!a.csv.empty()) {
        std::ostringstream csv;
        csv << kMetricCsvHeader << '\n' << report_to_csv_row(fs::path(a.restored).filename().string(), r) << '\n';
        std::ofstream out(a.csv, std::ios::trunc);
        if (!out) throw FormatError("cannot open " + a.csv + " for writing");
        out << csv.str();
    }
    if (a.report.empty() && a.csv.empty()) std::cout << report_to_json(r) << '\n';
    return kExitOk;
}

// ------------------------------------------------------------------ report

int cmd_report(const std::string& diagnostics, const std::string& out) {
    const std::vector<IterationRecord> rows = read_diagnostics_csv(diagnostics);
    json iteration = json::array(), segment = json::array(), phi = json::array(), rel = json::array(),
         s_change = json::array(), l_change = json::array();
    json res = {{"r_s", json::array()},    {"r_x_feas", json::array()}, {"r_x_sub", json::array()},
                {"r_x_sym", json::array()}, {"r_g", json::array()},      {"r_l", json::array()},
                {"max", json::array()}};
    for (const auto& r : rows) {
        iteration.push_back(r.iteration);
        segment.push_back(r.segment);
        phi.push_back(r.phi);
        rel.push_back(r.rel_change);
        s_change.push_back(r.s_change);
        l_change.push_back(r.l_change);
        const auto push = [&](const char* key, std::optional<double> v) {
            res[key].push_back(v ? json(*v) : json(nullptr));
        };
        const auto& rr = r.residuals;
        push("r_s", rr ? std::optional(rr->r_s) : std::nullopt);
        push("r_x_feas", rr ? std::optional(rr->r_x_feas) : std::nullopt);
        push("r_x_sub", rr ? std::optional(rr->r_x_sub) : std::nullopt);
        push("r_x_sym", rr ? std::optional(rr->r_x_sym) : std::nullopt);
        push("r_g", rr ? std::optional(rr->r_g) : std::nullopt);
        push("r_l", rr ? std::optional(rr->r_l) : std::nullopt);
        push("max", rr ? std::optional(rr->max()) : std::nullopt);
    }
    const json doc = {{"rows", rows.size()},
                      {"iteration", iteration},
                      {"segment", segment},
                      {"phi", phi},
                      {"rel_change", rel},
                      {"s_change", s_change},
                      {"l_change", l_change},
                      {"residuals", res}};
    write_text(out, doc.dump(2));
    return kExitOk;
}

// ------------------------------------------------------------------ import

struct ImportArgs {
    std::string raw;
    std::vector<std::size_t> dims;
    std::string dtype = "f64";
    bool normalize = false;
    std::string output;
};

int cmd_import(const ImportArgs& a) {
    if (a.dims.size() != 3) throw UsageError("import: --dims needs three values");
    const Tensor3 t = import_raw(a.raw, {a.dims[0], a.dims[1], a.dims[2]}, parse_raw_dtype(a.dtype), a.normalize);
    write_hsi(t, a.output);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NLTL2p hyperspectral denoising and destriping"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Corrupt a clean cube with a noise case");
    simulate_cmd->add_option("--input", sim.input, "Clean cube (.nlt)")->required();
    simulate_cmd->add_option("--output", sim.output, "Noisy cube (.nlt)")->required();
    simulate_cmd->add_option("--case", sim.case_id, "Noise case 1, 2 or 3");
    simulate_cmd->add_option("--noise-config", sim.noise_config, "Run config with a noise section");
    simulate_cmd->add_option("--seed", sim.seed, "Seed (overrides the config seed)");
    simulate_cmd->add_option("--components-dir", sim.components_dir, "Write components and a manifest here");

    DenoiseArgs den;
    auto* denoise_cmd = app.add_subcommand("denoise", "Restore a noisy cube");
    denoise_cmd->add_option("--input", den.input, "Noisy cube (.nlt)");
    denoise_cmd->add_option("--config", den.config, "Run config (JSON)")->required();
    denoise_cmd->add_option("--output", den.output, "Restored cube (.nlt)");
    denoise_cmd->add_option("--stripes-out", den.stripes_out, "Extracted sparse component (.nlt)");
    denoise_cmd->add_option("--diagnostics", den.diagnostics, "Per-iteration CSV");

    EvaluateArgs ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute MPSNR, MSSIM and ERGAS");
    evaluate_cmd->add_option("--restored", ev.restored, "Restored cube (.nlt)");
    evaluate_cmd->add_option("--clean", ev.clean, "Reference cube (.nlt)");
    evaluate_cmd->add_option("--report", ev.report, "JSON report path");
    evaluate_cmd->add_option("--csv", ev.csv, "CSV output path");
    evaluate_cmd->add_option("--batch-dir", ev.batch_dir, "Evaluate every .nlt file in a directory");
    evaluate_cmd->add_option("--psnr-cap", ev.psnr_cap, "PSNR reported for zero-error bands");
    evaluate_cmd->add_flag("--peak-clean", ev.peak_clean, "Use the clean band maximum as PSNR peak");
    evaluate_cmd->add_flag("--identity-check", ev.identity_check, "Verify clean + components == noisy");
    evaluate_cmd->add_option("--noisy", ev.noisy, "Noisy cube for --identity-check");
    evaluate_cmd->add_option("--components-dir", ev.components_dir, "Components for --identity-check");

    std::string diag_in, plot_out;
    auto* report_cmd = app.add_subcommand("report", "Turn a diagnostics CSV into plot-ready JSON");
    report_cmd->add_option("--diagnostics", diag_in, "Diagnostics CSV")->required();
    report_cmd->add_option("--out", plot_out, "Plot data JSON")->required();

    ImportArgs imp;
    auto* import_cmd = app.add_subcommand("import", "Convert a headerless raw cube to .nlt");
    import_cmd->add_option("--raw", imp.raw, "Raw file")->required();
    import_cmd->add_option("--dims", imp.dims, "I1 I2 I3")->required()->expected(3)->delimiter(',');
    import_cmd->add_option("--dtype", imp.dtype, "f64, f32 or u16 (little-endian)");
    import_cmd->add_flag("--normalize", imp.normalize, "Min-max scale the cube to [0, 1]");
    import_cmd->add_option("--output", imp.output, "Output cube (.nlt)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*simulate_cmd) return cmd_simulate(sim);
        if (*denoise_cmd) return cmd_denoise(den);
        if (*evaluate_cmd) return cmd_evaluate(ev);
        if (*report_cmd) return cmd_report(diag_in, plot_out);
        if (*import_cmd) return cmd_import(imp);
    } catch (const DescentViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    } catch (const IntegrityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

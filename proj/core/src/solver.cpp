#include "nltl2p/solver.hpp"

#include "nltl2p/errors.hpp"
#include "nltl2p/parallel.hpp"
#include "nltl2p/prox.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace nltl2p {

namespace {

constexpr double kDescentSlack = 1e-9;

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) throw UsageError("config: " + field + " " + rule);
}

Tensor3 map_entries(const Tensor3& t, double (*f)(double)) {
    Tensor3 out(t.dims());
    auto o = out.data();
    auto in = t.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
    return out;
}

double inv(double v) { return 1.0 / v; }
double inv_sqrt(double v) { return 1.0 / std::sqrt(v); }
double sqrt_fn(double v) { return std::sqrt(v); }

void check_data(const SolverState& state, const Tensor3& d) {
    if (d.dims() != state.plan.image_dims || state.l.dims() != d.dims() || state.s.dims() != d.dims()) {
        throw UsageError("solver: data tensor dims do not match the state");
    }
}

/// Q_i of the factor update: the mode-i unfolding of G with every other mode
/// multiplied by its factor.
Matrix partial_unfolding(const Tensor3& core, const std::array<const Matrix*, 3>& x, int mode) {
    Tensor3 t = core;
    for (int other = 1; other <= 3; ++other) {
        if (other != mode) t = mode_product(t, *x[static_cast<std::size_t>(other - 1)], other);
    }
    return unfold(t, mode);
}

FactorStack update_x_impl(const SolverState& state, const SolverConfig& config, const Tensor4& rl,
                          int mode, bool& degenerate) {
    if (mode < 1 || mode > 3) throw UsageError("update_x: mode must be 1, 2 or 3");
    const auto i = static_cast<std::size_t>(mode - 1);
    const double step = 1.0 / (1.0 + config.alpha_x);
    const std::size_t n = state.g.count();
    std::vector<Matrix> next(n);
    std::vector<char> flags(n, 0);
    parallel_for(n, [&](std::size_t j) {
        const std::array<const Matrix*, 3> x{&state.x[0][j], &state.x[1][j], &state.x[2][j]};
        const Matrix p = unfold(rl[j], mode);
        const Matrix q = partial_unfolding(state.g[j], x, mode);
        const Matrix& cur = state.x[i][j];
        const Matrix target = (1.0 - step) * cur + step * (p * q.transpose());
        auto proj = project_stiefel(target);
        flags[j] = proj.degenerate ? 1 : 0;
        next[j] = std::move(proj.x);
    });
    degenerate = std::find(flags.begin(), flags.end(), 1) != flags.end();
    return FactorStack(std::move(next));
}

Tensor4 update_g_impl(const SolverState& state, const SolverConfig& config, const Tensor4& rl) {
    const double step = 1.0 / (1.0 + config.alpha_g);
    Tensor4 o = project_to_core(rl, state.x[0], state.x[1], state.x[2]);
    Tensor4 arg = state.g * (1.0 - step);
    arg += o * step;
    return prox_weighted_l1(arg, state.w, step);
}

}  // namespace

double StationarityResiduals::max() const {
    return std::max({r_s, r_x_feas, r_x_sub, r_x_sym, r_g, r_l});
}

void SolverConfig::validate() const {
    require(delta > 0.0 && std::isfinite(delta), "delta", "must be positive");
    require(gamma > 0.0 && std::isfinite(gamma), "gamma", "must be positive");
    require(p > 0.0 && p < 1.0, "p", "must lie in (0, 1)");
    require(weight >= 0.0 && std::isfinite(weight), "weight", "must be nonnegative");
    for (double v : weights) require(v >= 0.0 && std::isfinite(v), "weights", "must be nonnegative");
    require(alpha_s > 0.0, "alpha_s", "must be positive");
    require(alpha_x > 0.0, "alpha_x", "must be positive");
    require(alpha_g > 0.0, "alpha_g", "must be positive");
    for (std::size_t i = 0; i < 3; ++i) require(ranks[i] > 0, "ranks", "must be positive");
    require(block_matching.block_size > 0, "block_size", "must be positive");
    require(block_matching.stride > 0, "stride", "must be positive");
    require(block_matching.group_size > 0, "group_size", "must be positive");
    require(block_matching.candidate_stride > 0, "candidate_stride", "must be positive");
    require(block_matching.window >= block_matching.block_size, "window", "must be at least block_size");
    require(max_outer_iters > 0, "max_outer_iters", "must be positive");
    require(inner_xg_iters > 0, "inner_xg_iters", "must be positive");
    require(rel_tol > 0.0, "rel_tol", "must be positive");
}

void set_plan(SolverState& state, const SolverConfig& config, BlockMatchingPlan plan) {
    state.plan = std::move(plan);
    state.weight = weight_tensor(state.plan);
    state.sqrt_weight = map_entries(state.weight, sqrt_fn);
    state.inv_weight = map_entries(state.weight, inv);
    state.inv_sqrt_weight = map_entries(state.weight, inv_sqrt);
    const std::size_t n = state.plan.group_count();
    if (config.weights.empty()) {
        state.w.assign(n, config.weight);
    } else if (config.weights.size() == n) {
        state.w = config.weights;
    } else {
        throw UsageError("config: weights has " + std::to_string(config.weights.size()) +
                         " entries but the plan has " + std::to_string(n) + " groups");
    }
}

SolverState initialize(const Tensor3& d, const SolverConfig& config) {
    config.validate();
    return initialize(d, config, build_plan(d, config.block_matching));
}

SolverState initialize(const Tensor3& d, const SolverConfig& config, BlockMatchingPlan plan) {
    config.validate();
    if (!d.all_finite()) throw UsageError("solver: input contains non-finite values");
    if (plan.image_dims != d.dims()) throw UsageError("solver: plan does not match the data dims");
    const Dims3 slab = plan.slab_dims();
    for (std::size_t i = 0; i < 3; ++i) {
        if (config.ranks[i] > slab[i]) {
            throw ConfigError("config: rank n" + std::to_string(i + 1) + " = " +
                              std::to_string(config.ranks[i]) + " exceeds group dimension m" +
                              std::to_string(i + 1) + " = " + std::to_string(slab[i]));
        }
    }
    SolverState state;
    set_plan(state, config, std::move(plan));
    state.l = d;
    state.s = Tensor3(d.dims());
    auto tucker = init_hosvd(extract(state.plan, state.l), config.ranks);
    state.g = std::move(tucker.core);
    state.x = std::move(tucker.factors);
    return state;
}

ObjectiveTerms objective_terms(const SolverState& state, const SolverConfig& config, const Tensor3& d) {
    check_data(state, d);
    ObjectiveTerms t;
    {
        auto w = state.weight.data();
        auto l = state.l.data();
        auto s = state.s.data();
        auto dd = d.data();
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double r = l[i] + s[i] - dd[i];
            acc += w[i] * r * r;
        }
        t.data = 0.5 * config.delta * acc;
    }
    t.stripes = config.gamma * l2p_pow(hadamard(state.sqrt_weight, state.s), config.p);
    t.core = weighted_l1(state.g, state.w);
    Tensor4 residual = extract(state.plan, state.l);
    residual -= compose(state.g, state.x[0], state.x[1], state.x[2]);
    t.fit = 0.5 * frobenius_sq(residual);
    return t;
}

double objective(const SolverState& state, const SolverConfig& config, const Tensor3& d) {
    return objective_terms(state, config, d).total();
}

Tensor3 update_s(const SolverState& state, const SolverConfig& config, const Tensor3& d) {
    check_data(state, d);
    const double step = config.delta / (config.delta + config.alpha_s);
    const double mu = config.gamma / (config.delta + config.alpha_s);
    Tensor3 arg(d.dims());
    {
        auto a = arg.data();
        auto s = state.s.data();
        auto l = state.l.data();
        auto dd = d.data();
        auto sw = state.sqrt_weight.data();
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = sw[i] * (s[i] - step * (s[i] + l[i] - dd[i]));
        }
    }
    return hadamard(state.inv_sqrt_weight, prox_l2p(arg, mu, config.p));
}

FactorStack update_x(const SolverState& state, const SolverConfig& config, int mode) {
    bool degenerate = false;
    return update_x(state, config, mode, degenerate);
}

FactorStack update_x(const SolverState& state, const SolverConfig& config, int mode, bool& degenerate) {
    return update_x_impl(state, config, extract(state.plan, state.l), mode, degenerate);
}

Tensor4 update_g(const SolverState& state, const SolverConfig& config) {
    return update_g_impl(state, config, extract(state.plan, state.l));
}

Tensor3 update_l(const SolverState& state, const SolverConfig& config, const Tensor3& d) {
    check_data(state, d);
    const double mix = 1.0 / (1.0 + config.delta);
    const Tensor3 back = transpose_apply(state.plan, compose(state.g, state.x[0], state.x[1], state.x[2]));
    Tensor3 out(d.dims());
    auto o = out.data();
    auto b = back.data();
    auto iw = state.inv_weight.data();
    auto dd = d.data();
    auto s = state.s.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = mix * iw[i] * b[i] + (1.0 - mix) * (dd[i] - s[i]);
    }
    return out;
}

StationarityResiduals stationarity_residuals(const SolverState& state, const SolverConfig& config,
                                             const Tensor3& d) {
    check_data(state, d);
    StationarityResiduals r;
    r.r_s = frobenius(update_s(state, config, d) - state.s);

    const Tensor4 rl = extract(state.plan, state.l);
    r.r_g = frobenius(update_g_impl(state, config, rl) - state.g);

    const std::size_t n = state.g.count();
    for (int mode = 1; mode <= 3; ++mode) {
        const auto i = static_cast<std::size_t>(mode - 1);
        std::vector<std::array<double, 3>> parts(n);
        parallel_for(n, [&](std::size_t j) {
            const std::array<const Matrix*, 3> x{&state.x[0][j], &state.x[1][j], &state.x[2][j]};
            const Matrix& xi = state.x[i][j];
            const Matrix p = unfold(rl[j], mode);
            const Matrix q = partial_unfolding(state.g[j], x, mode);
            const Matrix h = (xi * q - p) * q.transpose();
            const auto m = xi.rows();
            const auto k = xi.cols();
            parts[j][0] = (xi.transpose() * xi - Matrix::Identity(k, k)).squaredNorm();
            parts[j][1] = ((Matrix::Identity(m, m) - xi * xi.transpose()) * h).squaredNorm();
            parts[j][2] = (h.transpose() * xi - xi.transpose() * h).squaredNorm();
        });
        std::array<double, 3> acc{0.0, 0.0, 0.0};
        for (const auto& part : parts) {
            for (std::size_t c = 0; c < 3; ++c) acc[c] += part[c];
        }
        r.r_x_feas += std::sqrt(acc[0]);
        r.r_x_sub += std::sqrt(acc[1]);
        r.r_x_sym += std::sqrt(acc[2]);
    }

    const Tensor3 back = transpose_apply(state.plan, compose(state.g, state.x[0], state.x[1], state.x[2]));
    Tensor3 res(d.dims());
    {
        auto o = res.data();
        auto l = state.l.data();
        auto s = state.s.data();
        auto dd = d.data();
        auto iw = state.inv_weight.data();
        auto b = back.data();
        for (std::size_t idx = 0; idx < o.size(); ++idx) {
            o[idx] = config.delta * (l[idx] + s[idx] - dd[idx]) + l[idx] - iw[idx] * b[idx];
        }
    }
    r.r_l = frobenius(res);
    return r;
}

RunResult run(const Tensor3& d, const SolverConfig& config) {
    return run(d, config, initialize(d, config));
}

RunResult run(const Tensor3& d, const SolverConfig& config, SolverState state) {
    config.validate();
    check_data(state, d);
    using Clock = std::chrono::steady_clock;

    RunResult result;
    Diagnostics& diag = result.diagnostics;
    double phi_prev = objective(state, config, d);
    diag.phi_initial = phi_prev;
    std::size_t segment = 0;

    for (std::size_t k = 0; k < config.max_outer_iters; ++k) {
        const auto start = Clock::now();
        // The first plan came from L0; rebuild it from the current L for the
        // next bm_refresh_iters - 1 iterations, then keep it fixed.
        if (state.iter > 0 && state.iter < config.bm_refresh_iters) {
            set_plan(state, config, build_plan(state.l, config.block_matching));
            ++segment;
            phi_prev = objective(state, config, d);
        }

        const Tensor3 s_next = update_s(state, config, d);
        const double s_change = frobenius(s_next - state.s);
        state.s = s_next;

        const Tensor4 rl = extract(state.plan, state.l);
        for (std::size_t inner = 0; inner < config.inner_xg_iters; ++inner) {
            for (int mode = 1; mode <= 3; ++mode) {
                bool degenerate = false;
                state.x[static_cast<std::size_t>(mode - 1)] =
                    update_x_impl(state, config, rl, mode, degenerate);
                if (degenerate) ++diag.degenerate_projections;
            }
            state.g = update_g_impl(state, config, rl);
        }

        Tensor3 l_next = update_l(state, config, d);
        const double l_change = frobenius(l_next - state.l);
        const double rel_change = l_change / std::max(frobenius(state.l), 1e-12);
        state.l = std::move(l_next);
        ++state.iter;

        if (!state.l.all_finite() || !state.s.all_finite()) {
            throw NumericalError("solver: non-finite iterate at outer iteration " +
                                 std::to_string(state.iter));
        }

        const double phi = objective(state, config, d);
        if (config.check_descent && phi > phi_prev + kDescentSlack * (1.0 + std::abs(phi_prev))) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "objective increased at outer iteration " << state.iter << ": " << phi_prev << " -> "
                << phi;
            throw DescentViolation(msg.str());
        }
        phi_prev = phi;
        state.phi_history.push_back(phi);

        IterationRecord rec;
        rec.iteration = state.iter;
        rec.segment = segment;
        rec.phi = phi;
        rec.rel_change = rel_change;
        rec.s_change = s_change;
        rec.l_change = l_change;
        if (config.track_residuals) rec.residuals = stationarity_residuals(state, config, d);
        rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        diag.iterations.push_back(rec);

        if (rel_change <= config.rel_tol) {
            diag.converged = true;
            break;
        }
    }
    result.state = std::move(state);
    return result;
}

// ---------------------------------------------------------------------------
// Diagnostics CSV
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCsvHeader =
    "iteration,segment,phi,rel_change,s_change,l_change,r_s,r_x_feas,r_x_sub,r_x_sym,r_g,r_l,wall_ms";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("diagnostics CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

}  // namespace

void write_diagnostics_csv(const Diagnostics& diag, std::ostream& out) {
    out << kCsvHeader << '\n';
    out << std::setprecision(17);
    for (const auto& rec : diag.iterations) {
        out << rec.iteration << ',' << rec.segment << ',' << rec.phi << ',' << rec.rel_change << ','
            << rec.s_change << ',' << rec.l_change << ',';
        if (rec.residuals) {
            const auto& r = *rec.residuals;
            out << r.r_s << ',' << r.r_x_feas << ',' << r.r_x_sub << ',' << r.r_x_sym << ',' << r.r_g << ','
                << r.r_l << ',';
        } else {
            out << ",,,,,,";
        }
        out << rec.wall_ms << '\n';
    }
}

void write_diagnostics_csv(const Diagnostics& diag, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write_diagnostics_csv(diag, out);
}

std::vector<IterationRecord> read_diagnostics_csv(std::istream& in) {
    std::vector<IterationRecord> out;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kCsvHeader) throw FormatError("diagnostics CSV: unexpected header");
            saw_header = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 13) {
            throw FormatError("diagnostics CSV line " + std::to_string(line_no) + ": expected 13 fields, got " +
                              std::to_string(f.size()));
        }
        IterationRecord rec;
        rec.iteration = static_cast<std::size_t>(parse_double(f[0], line_no));
        rec.segment = static_cast<std::size_t>(parse_double(f[1], line_no));
        rec.phi = parse_double(f[2], line_no);
        rec.rel_change = parse_double(f[3], line_no);
        rec.s_change = parse_double(f[4], line_no);
        rec.l_change = parse_double(f[5], line_no);
        const bool has_res = !f[6].empty();
        if (has_res) {
            StationarityResiduals r;
            r.r_s = parse_double(f[6], line_no);
            r.r_x_feas = parse_double(f[7], line_no);
            r.r_x_sub = parse_double(f[8], line_no);
            r.r_x_sym = parse_double(f[9], line_no);
            r.r_g = parse_double(f[10], line_no);
            r.r_l = parse_double(f[11], line_no);
            rec.residuals = r;
        } else {
            for (std::size_t c = 7; c < 12; ++c) {
                if (!f[c].empty()) {
                    throw FormatError("diagnostics CSV line " + std::to_string(line_no) +
                                      ": residual columns partially filled");
                }
            }
        }
        rec.wall_ms = parse_double(f[12], line_no);
        out.push_back(rec);
    }
    // An empty file is an empty run.
    return out;
}

std::vector<IterationRecord> read_diagnostics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return read_diagnostics_csv(in);
}

}  // namespace nltl2p

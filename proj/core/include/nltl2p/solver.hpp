#pragma once

#include "nltl2p/block_matching.hpp"
#include "nltl2p/lowrank.hpp"
#include "nltl2p/tensor.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nltl2p {

/// Model and algorithm parameters.
struct SolverConfig {
    double delta = 0.5;    // data fidelity weight
    double gamma = 150.0;  // stripe (l2,p) penalty weight
    double p = 0.1;        // l2,p exponent, in (0, 1)
    double weight = 100.0;        // core l1 weight used for every group when `weights` is empty
    std::vector<double> weights;  // optional explicit per-group weights (length N)
    double alpha_s = 1e-3;
    double alpha_x = 1e-3;
    double alpha_g = 1e-3;
    Ranks3 ranks{25, 2, 32};
    BlockMatchingParams block_matching{};
    std::size_t max_outer_iters = 100;
    std::size_t inner_xg_iters = 3;
    std::size_t bm_refresh_iters = 2;  // outer iterations (from the start) that rebuild the plan
    double rel_tol = 0.01;  // stop when rel_change <= rel_tol
    bool check_descent = true;
    bool track_residuals = true;

    /// Throws UsageError naming the first offending field.
    void validate() const;
};

/// The iterate (S, [X1], [X2], [X3], [G], L) plus everything derived from the plan.
struct SolverState {
    Tensor3 s;
    Tensor3 l;
    std::array<FactorStack, 3> x;
    Tensor4 g;
    BlockMatchingPlan plan;
    std::vector<double> w;  // per-group core weights, length N
    Tensor3 weight;         // W_R
    Tensor3 sqrt_weight;
    Tensor3 inv_weight;
    Tensor3 inv_sqrt_weight;
    std::size_t iter = 0;
    std::vector<double> phi_history;
};

/// Residual norms of the first-order stationarity system. r_s and r_g are
/// fixed-point residuals of the S and G proximal updates.
struct StationarityResiduals {
    double r_s = 0.0;
    double r_x_feas = 0.0;
    double r_x_sub = 0.0;
    double r_x_sym = 0.0;
    double r_g = 0.0;
    double r_l = 0.0;

    double max() const;
};

struct ObjectiveTerms {
    double data = 0.0;    // (delta/2) ||R(L + S - D)||_F^2
    double stripes = 0.0; // gamma ||sqrt(W_R) . S||_{2,p}^p
    double core = 0.0;    // ||[G]||_{1,w}
    double fit = 0.0;     // (1/2) ||R(L) - [G] x1 [X1] x2 [X2] x3 [X3]||_F^2

    double total() const { return data + stripes + core + fit; }
};

/// Install a plan: recompute W_R and its derived caches and resolve the
/// per-group weights. Factor and core stacks keep their values.
void set_plan(SolverState& state, const SolverConfig& config, BlockMatchingPlan plan);

/// Start point: plan matched on D, L = D, S = 0, factors and cores from a
/// truncated HOSVD of R(D).
SolverState initialize(const Tensor3& d, const SolverConfig& config);

/// Same start point with a caller-supplied plan.
SolverState initialize(const Tensor3& d, const SolverConfig& config, BlockMatchingPlan plan);

ObjectiveTerms objective_terms(const SolverState& state, const SolverConfig& config, const Tensor3& d);
double objective(const SolverState& state, const SolverConfig& config, const Tensor3& d);

Tensor3 update_s(const SolverState& state, const SolverConfig& config, const Tensor3& d);

/// Factor update for mode in {1, 2, 3}, using the state's current factors for
/// the other two modes (Gauss-Seidel when called in order 1, 2, 3).
FactorStack update_x(const SolverState& state, const SolverConfig& config, int mode);

/// Same, but reports whether any slab hit a rank-deficient projection.
FactorStack update_x(const SolverState& state, const SolverConfig& config, int mode, bool& degenerate);

Tensor4 update_g(const SolverState& state, const SolverConfig& config);
Tensor3 update_l(const SolverState& state, const SolverConfig& config, const Tensor3& d);

StationarityResiduals stationarity_residuals(const SolverState& state, const SolverConfig& config,
                                             const Tensor3& d);

struct IterationRecord {
    std::size_t iteration = 0;  // 1-based outer iteration
    std::size_t segment = 0;    // plan segment; increments whenever the plan is rebuilt
    double phi = 0.0;
    double rel_change = 0.0;    // ||L+ - L||_F / max(||L||_F, 1e-12)
    double s_change = 0.0;      // ||S+ - S||_F
    double l_change = 0.0;      // ||L+ - L||_F
    std::optional<StationarityResiduals> residuals;
    double wall_ms = 0.0;
};

struct Diagnostics {
    double phi_initial = 0.0;
    std::vector<IterationRecord> iterations;
    bool converged = false;
    std::size_t degenerate_projections = 0;
};

struct RunResult {
    SolverState state;
    Diagnostics diagnostics;
};

/// Proximal block coordinate descent. Per outer iteration: optional plan
/// rebuild (iterations 2..bm_refresh_iters), S update, inner_xg_iters sweeps
/// of X1, X2, X3, G, then the L update. Stops on rel_change <= rel_tol or
/// after max_outer_iters. Throws DescentViolation if the objective rises by
/// more than 1e-9 (1 + |phi|) within a plan segment and check_descent is set.
RunResult run(const Tensor3& d, const SolverConfig& config);

/// Continue from an existing state (the plan is rebuilt only while
/// state.iter < bm_refresh_iters).
RunResult run(const Tensor3& d, const SolverConfig& config, SolverState state);

/// CSV with header
/// iteration,segment,phi,rel_change,s_change,l_change,r_s,r_x_feas,r_x_sub,r_x_sym,r_g,r_l,wall_ms
/// Residual columns are empty when residuals were not tracked.
void write_diagnostics_csv(const Diagnostics& diag, std::ostream& out);
void write_diagnostics_csv(const Diagnostics& diag, const std::string& path);

/// Parse the CSV written above. Throws FormatError on malformed input.
std::vector<IterationRecord> read_diagnostics_csv(std::istream& in);
std::vector<IterationRecord> read_diagnostics_csv(const std::string& path);

}  // namespace nltl2p

#pragma once

#include "rbsde/bsde.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbsde {

/// (Y, Z, K) on the lattice. K is stored through its increments: dK(i, k, node)
/// is the discounted push applied at t_k, so along a path K_0 = 0 and
/// K_{k+1} = K_k + dK_k.
struct SolutionField {
    NodeField Y;
    NodeField Z;
    NodeField dK;
    /// 0-based mode whose obstacle was binding when the projection pushed Y^i,
    /// -1 otherwise; empty for the penalization backend.
    std::vector<int> binding;

    /// E[K_k] per step for mode i.
    std::vector<double> expected_K(const Lattice& lattice, std::size_t mode) const;
    /// Accumulates K along an explicit node path (one node index per step).
    std::vector<double> K_along(std::span<const std::size_t> path, std::size_t mode) const;
};

/// One level of the penalty schedule.
struct PenaltyLevel {
    double n = 0.0;
    /// Per mode i: E sum_k sum_j [(Y^i - Y^j + g_ij)^-]^2 dt.
    std::vector<double> violation;
    double violation_total = 0.0;
    double scaled = 0.0;  // n^2 * violation_total
    double sup_violation = 0.0;
    double exclusivity = 0.0;  // max (Y^ij)^- (Y^ji)^-
    std::vector<double> skorokhod;
    std::vector<double> y0;
    /// min over points of Y^{n} - Y^{previous level}; +inf for the first level.
    double min_increment = std::numeric_limits<double>::infinity();
};

struct PenaltyDiagnostics {
    std::vector<PenaltyLevel> levels;
};

struct PenalizedSolution {
    BsdeField field;
    NodeField dK;
    PenaltyLevel diagnostics;
};

/// Solves the m-dimensional BSDE with the penalized drivers for a single n.
/// `warm_start`, when given, seeds the per-node iteration.
PenalizedSolution solve_penalized(const SwitchingProblem& problem, const Lattice& lattice,
                                  double n, const InnerSolverOptions& inner = {},
                                  const NodeField* warm_start = nullptr);

enum class Backend { Penalization, Projection };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& name);

/// 1, 2, 4, ..., n_max.
std::vector<double> doubling_schedule(double n_max);

struct ReflectOptions {
    Backend backend = Backend::Projection;
    std::vector<double> schedule = doubling_schedule(64);
    InnerSolverOptions inner;
};

struct ReflectResult {
    SolutionField solution;
    std::optional<PenaltyDiagnostics> trace;
    std::size_t projection_passes = 0;  // worst node
};

/// Solves the decoupled obliquely reflected system. Drivers may read their own
/// component of ybar but not the others.
ReflectResult solve_reflected(const SwitchingProblem& problem, const Lattice& lattice,
                              const ReflectOptions& options = {});

/// Per mode: E sum_k e^{-r t_k} (Y^i_k - max_{j != i}(Y^j_k - g_ij)) dK^i_k.
std::vector<double> skorokhod_residual(const SolutionField& solution,
                                       const SwitchingProblem& problem, const Lattice& lattice);

/// sup over (mode, step, node) of (max_{j != i}(Y^j - g_ij) - Y^i)^+.
double obstacle_violation(const NodeField& Y, const SwitchingProblem& problem,
                          const Lattice& lattice);

struct KDiagnostics {
    double min_increment;             // over all modes, steps, nodes
    std::vector<double> total_variation;  // E sum_k |dK^i_k| per mode
};

KDiagnostics k_diagnostics(const SolutionField& solution, const Lattice& lattice);

struct DecayCheck {
    bool passed = true;
    std::optional<std::size_t> failing_level;  // index into the trace
    std::string reason;
    double max_scaled = 0.0;
    double median_scaled = 0.0;
};

struct DecayPoint {
    double n;
    double violation;
};

/// Checks that the violation is nonincreasing in n and n^2 * violation stays
/// within `band` times its median over the schedule.
DecayCheck penalty_decay_check(std::span<const DecayPoint> trace, double band = 4.0);
DecayCheck penalty_decay_check(const PenaltyDiagnostics& trace, double band = 4.0);

}  // namespace rbsde

#pragma once

#include "rbsde/reflect.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace rbsde {

enum class NormMethod { PathEnumeration, StepSumProxy };

std::string to_string(NormMethod method);

struct WeightedNorm {
    double value;
    NormMethod method;
};

/// Discrete E[sup_k e^{-r t_k} |Y_k|^2]^{1/2}. Exact by path enumeration when the
/// lattice has at most `max_paths` paths; otherwise the upper bound
/// E[sum_k e^{-r t_k} |Y_k|^2]^{1/2}.
WeightedNorm weighted_norm(const NodeField& Y, const Lattice& lattice,
                           std::size_t max_paths = 4096);

/// Driver with the y arguments read from `gamma` (own component kept live when
/// the driver declares retain_own_y).
DriverSpec freeze_driver(const DriverSpec& driver, std::shared_ptr<const NodeField> gamma);

SwitchingProblem freeze_problem(const SwitchingProblem& problem,
                                std::shared_ptr<const NodeField> gamma);

/// phi(gamma): solution of the reflected system whose drivers are frozen at gamma.
SolutionField apply_phi(const SwitchingProblem& problem, const Lattice& lattice,
                        const NodeField& gamma, const InnerSolverOptions& inner = {});

struct CouplingState {
    NodeField gamma;
    std::size_t iterations = 0;
    std::vector<double> errors;  // e_k = ||Y^(k+1) - Y^(k)||
    double rate = 0.0;           // kappa-hat after the last iteration
    /// kappa-hat as known at iteration k (fit over e_{k-2..k}); entry k is 0 for k < 2.
    std::vector<double> rates;
    NormMethod method = NormMethod::PathEnumeration;
    bool converged = false;
    std::vector<std::string> warnings;
};

struct FixedPointOptions {
    double tol = 1e-8;
    std::size_t max_iters = 30;
    InnerSolverOptions inner;
    std::size_t max_paths = 4096;
};

struct FixedPointResult {
    SolutionField solution;
    CouplingState state;
};

/// Geometric rate exp(slope) of a least-squares fit of log e over the last
/// three entries; 0 when the trace reaches 0.
double estimate_rate(std::span<const double> errors);

/// Picard iteration Y^(k+1) = phi(Y^(k)) from Y^(0) = 0.
FixedPointResult fixed_point_solve(const SwitchingProblem& problem, const Lattice& lattice,
                                   const FixedPointOptions& options = {});

struct ProbeResult {
    double max_ratio = 0.0;
    std::vector<double> ratios;
    std::size_t skipped = 0;
    NormMethod method = NormMethod::PathEnumeration;
};

/// max over sampled pairs of ||phi(G) - phi(G')|| / ||G - G'|| with fields drawn
/// uniformly from [-amplitude, amplitude].
ProbeResult contraction_probe(const SwitchingProblem& problem, const Lattice& lattice,
                              std::size_t pairs, std::uint64_t seed, double amplitude = 0.0,
                              const InnerSolverOptions& inner = {},
                              std::size_t max_paths = 4096);

/// Same ratio for explicitly given pairs.
ProbeResult contraction_probe(const SwitchingProblem& problem, const Lattice& lattice,
                              std::span<const std::pair<NodeField, NodeField>> pairs,
                              const InnerSolverOptions& inner = {},
                              std::size_t max_paths = 4096);

}  // namespace rbsde

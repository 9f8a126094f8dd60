#pragma once

#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"

#include <span>

namespace rbsde {

/// Per-node fixed-point settings for the implicit-in-Y step.
struct InnerSolverOptions {
    double tol = 1e-12;
    std::size_t max_iters = 50;
};

/// Discrete (Y, Z) on the lattice. Z at the terminal step is 0.
struct BsdeField {
    NodeField Y;
    NodeField Z;
};

/// Backward induction Y_k = E[Y_{k+1}] + dt (f(t_k, X_k, Y_k, Z_k) - r Y_k) with
/// Z_k = E[Y_{k+1} dB] / dt, solved jointly over the mode vector at every node.
/// `terminal` holds problem.m() values per terminal node (node-major); an empty
/// span means zero terminal data.
BsdeField solve_bsde(const SwitchingProblem& problem, const Lattice& lattice,
                     const DriverSpec& driver, std::span<const double> terminal = {},
                     const InnerSolverOptions& inner = {});

/// Undiscounted values from discounted ones: Y_k = e^{r t_k} * (e^{-r t_k} Y_k).
NodeField undiscount(const NodeField& discounted, const Lattice& lattice);
NodeField discount(const NodeField& values, const Lattice& lattice);

}  // namespace rbsde

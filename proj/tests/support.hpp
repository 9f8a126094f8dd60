// Small builders shared by the unit tests.
#pragma once

#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace testing {

using namespace rbsde;

/// Drivers f_i = values[i], uniform switching cost g, deterministic path.
inline SwitchingProblem constant_problem(std::vector<double> values, double g, double r) {
    SwitchingProblem p;
    p.modes.m = values.size();
    double bound = 0.0;
    for (double v : values) bound = std::max(bound, std::abs(v));
    p.driver.eval = [values](std::size_t i, const NodePoint&, std::span<const double>, double) {
        return values[i];
    };
    p.driver.zero_bound = bound;
    p.costs.eval = [g](std::size_t, std::size_t, std::span<const double>) { return g; };
    p.costs.bound = g;
    p.discount = r;
    return p;
}

/// Cost table g[i][j] instead of a uniform value.
inline void set_cost_table(SwitchingProblem& p, std::vector<std::vector<double>> g) {
    double bound = 0.0;
    for (const auto& row : g)
        for (double v : row) bound = std::max(bound, std::abs(v));
    p.costs.eval = [g](std::size_t i, std::size_t j, std::span<const double>) { return g[i][j]; };
    p.costs.bound = bound;
}

inline TimeGrid grid_for(const SwitchingProblem& p, double dt, double tail = 1e-4) {
    const double T = truncate_horizon(p.discount, std::max(p.driver.zero_bound, 1e-12), tail);
    const auto n = static_cast<std::size_t>(std::ceil(T / dt));
    return TimeGrid(static_cast<double>(n) * dt, n, p.discount);
}

inline Lattice path_lattice(double horizon, std::size_t steps, double r) {
    return build_lattice(StateModelSpec{}, TimeGrid(horizon, steps, r));
}

inline Lattice tree(StateKind kind, double horizon, std::size_t steps, double r,
                    double sigma = 1.0) {
    StateModelSpec spec;
    spec.kind = kind;
    spec.volatility = [sigma](double) { return sigma; };
    return build_lattice(spec, TimeGrid(horizon, steps, r));
}

/// Enumerates all root-to-terminal node paths with their probabilities.
template <class Fn>
void for_each_path(const Lattice& lat, Fn&& fn) {
    std::vector<std::size_t> path{0};
    auto rec = [&](auto&& self, double prob) -> void {
        const std::size_t k = path.size() - 1;
        if (k == lat.steps()) {
            fn(std::span<const std::size_t>(path), prob);
            return;
        }
        for (const Branch& b : lat.branches(k, path.back())) {
            path.push_back(b.child);
            self(self, prob * b.prob);
            path.pop_back();
        }
    };
    rec(rec, 1.0);
}

}  // namespace testing

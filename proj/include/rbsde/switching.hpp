#pragma once

#include "rbsde/bsde.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/reflect.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbsde {

struct SwitchRecord {
    std::size_t step;
    std::size_t mode;
};

/// Grid-valued switching strategy with path-feedback decisions.
///
/// The decision at (step, node) may only depend on the current mode and the
/// node, which makes every switch measurable at its switch time. At most one
/// switch happens per step, so every path carries finitely many switches.
/// Modes are 0-based.
class Strategy {
public:
    /// Returns the target mode when switching at (step, node) from `mode`,
    /// or -1 to stay.
    using Policy = std::function<int(std::size_t step, std::size_t node, std::size_t mode)>;

    /// Deterministic schedule: start in `start_mode` at `start_step`, then switch
    /// to `switches[n].mode` at `switches[n].step`. The first switch may happen
    /// at the start step; later switch steps are strictly increasing.
    static Strategy open_loop(std::size_t modes, std::size_t start_step, std::size_t start_mode,
                              std::vector<SwitchRecord> switches, std::size_t steps);

    static Strategy feedback(std::size_t modes, std::size_t start_step, std::size_t start_mode,
                             Policy policy, std::string label = "feedback");

    /// Pseudo-random feedback strategy: at every (step, node, mode) it switches with
    /// probability `switch_probability` to a uniformly chosen other mode.
    static Strategy random(std::size_t modes, std::size_t start_mode, std::uint64_t seed,
                           double switch_probability);

    std::size_t modes() const { return modes_; }
    std::size_t start_step() const { return start_step_; }
    std::size_t start_mode() const { return start_mode_; }
    const std::string& label() const { return label_; }
    bool is_open_loop() const { return open_loop_.has_value(); }
    const std::vector<SwitchRecord>& switches() const;

    /// Target mode (or -1) at (step, node) when currently in `mode`.
    int decision(std::size_t step, std::size_t node, std::size_t mode) const;

    Strategy with_start(std::size_t start_step, std::size_t start_mode) const;

private:
    std::size_t modes_ = 1;
    std::size_t start_step_ = 0;
    std::size_t start_mode_ = 0;
    Policy policy_;
    std::optional<std::vector<SwitchRecord>> open_loop_;
    std::string label_;
};

/// Mode a_t of an open-loop strategy at a grid index (right-continuous at switches).
std::size_t state_process(const Strategy& strategy, std::size_t step);

/// Modes along an explicit node path (path[k] is the node at step k, k = 0..N).
/// Entries before the start step are reported as the start mode.
std::vector<std::size_t> state_along(const Strategy& strategy, const Lattice& lattice,
                                     std::span<const std::size_t> path);

/// Discounted cost process A_k = sum_{tau_n <= t_k} e^{-r tau_n} g(X_{tau_n}) along a path.
std::vector<double> cost_process(const Strategy& strategy, const SwitchingProblem& problem,
                                 const Lattice& lattice, std::span<const std::size_t> path);

struct StrategyEvaluation {
    /// Value before the decision at (step, node) while in each mode.
    NodeField U;
    /// Martingale integrand of the mode being run after the decision.
    NodeField V;
    /// E[A_T - A_{t-} | state] and its second moment, discounted units.
    NodeField cost_to_go;
    NodeField cost_to_go_sq;

    double U0 = 0.0;
    double total_cost_mean = 0.0;
    double total_cost_second_moment = 0.0;
};

/// Switched BSDE e^{-rt} U_t = int e^{-rs} f_{a_s}(U, V) ds - (A_T - A_t) - int e^{-rs} V dB
/// by backward induction on the lattice.
StrategyEvaluation eval_strategy(const Strategy& strategy, const SwitchingProblem& problem,
                                 const Lattice& lattice, const InnerSolverOptions& inner = {});

struct OracleOptions {
    std::size_t budget = 3;
    InnerSolverOptions inner;
    double stabilization_tol = 1e-12;
    std::size_t max_passes = 50;  // general regime
    double pass_tol = 1e-10;
};

struct OracleResult {
    NodeField value;              // V at the full budget
    std::vector<double> value0;   // per start mode at the root
    Strategy optimal;             // argmax decisions, start mode 0
    std::size_t budget = 0;
    bool exact_regime = true;
    bool stabilized = false;      // V^budget == V^{budget-1}
    std::size_t sufficient_budget = 0;  // min b with V^b == V^budget
    std::vector<double> budget_gaps;    // max |V^b - V^budget| for b = 0..budget
    std::size_t passes = 1;       // general regime outer passes
};

/// Dynamic programming over (step, node, mode, switches left). Exact when drivers
/// do not read other modes; otherwise iterates with the other modes frozen at the
/// previous pass.
OracleResult oracle_value(const SwitchingProblem& problem, const Lattice& lattice,
                          const OracleOptions& options = {});

struct RepresentationReport {
    struct Domination {
        std::string label;
        std::size_t start_mode;
        double U0;
        double Y0;
    };
    std::vector<Domination> sampled;
    std::vector<Domination> violations;
    double max_excess = -std::numeric_limits<double>::infinity();
    double oracle_delta = 0.0;         // max_i |Y0^i - oracle0^i|
    std::vector<double> optimal_delta; // per start mode |U0(a*) - Y0^i|
    bool oracle_stabilized = false;
    std::size_t sufficient_budget = 0;
    bool dominated = true;
    bool attained = true;
    bool optimal_attains = true;

    bool passed() const { return dominated && attained && optimal_attains; }
};

struct RepresentationTolerances {
    double domination = 1e-8;
    double attainment = 1e-6;
};

RepresentationReport representation_check(const SwitchingProblem& problem,
                                          const Lattice& lattice, const NodeField& Y,
                                          std::span<const Strategy> strategies,
                                          const OracleOptions& oracle = {},
                                          const RepresentationTolerances& tol = {});

/// Seeded sample of random feedback strategies with random start modes.
std::vector<Strategy> sample_strategies(std::size_t modes, std::size_t count, std::uint64_t seed,
                                        double switch_probability = 0.05);

}  // namespace rbsde

#pragma once

#include "rbsde/lattice.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbsde {

/// Number of operating modes. Modes are 0-based in the C++ API and 1-based in
/// reports and messages.
struct ModeSet {
    std::size_t m = 1;
};

/// Deterministic Lipschitz modulus u(t) of the drivers in (y, z).
struct LipschitzModulus {
    enum class Form { Window, Exponential };

    Form form = Form::Exponential;
    double level = 0.0;
    double decay = 0.0;  // exponential form
    double window_end = std::numeric_limits<double>::infinity();  // window form

    static LipschitzModulus zero() { return {Form::Exponential, 0.0, 1.0, 0.0}; }
    static LipschitzModulus exponential(double level, double decay) {
        return {Form::Exponential, level, decay, 0.0};
    }
    static LipschitzModulus window(double level, double window_end) {
        return {Form::Window, level, 0.0, window_end};
    }

    double operator()(double t) const;
    double sup() const { return level; }
    /// Closed-form integrals; +inf when they diverge.
    double integral() const;
    double square_integral() const;
};

/// Evaluation point handed to drivers. `step`/`node` locate the point on the
/// lattice so that frozen drivers can read fields.
struct NodePoint {
    double t;
    std::span<const double> x;
    std::size_t step;
    std::size_t node;
};

struct DriverSpec {
    /// f_i(t, x, ybar, z) with ybar the full mode vector and z the own Z^i.
    using Eval = std::function<double(std::size_t mode, const NodePoint& p,
                                      std::span<const double> ybar, double z)>;

    Eval eval;
    LipschitzModulus lipschitz = LipschitzModulus::zero();
    double zero_bound = 0.0;    // B_f >= |f_i(t, x, 0, 0)|
    bool cross_mode_y = false;  // reads ybar^j for some j != i
    bool own_y = false;         // reads ybar^i
    bool z_dependent = false;
    /// When freezing the cross-mode arguments, keep the own component live.
    bool retain_own_y = false;

    double operator()(std::size_t mode, const NodePoint& p, std::span<const double> ybar,
                      double z) const {
        return eval(mode, p, ybar, z);
    }
    bool y_independent() const { return !cross_mode_y && !own_y; }
};

enum class AssumptionMode { H2, H2Prime };

std::string to_string(AssumptionMode mode);

struct SwitchingCostSpec {
    /// g_ij(x) for i != j.
    using Eval = std::function<double(std::size_t i, std::size_t j, std::span<const double> x)>;

    Eval eval;
    double diagonal = 0.0;  // declared g_ii, only read by validation
    double bound = 0.0;     // G >= |g_ij|

    double operator()(std::size_t i, std::size_t j, std::span<const double> x) const {
        return i == j ? 0.0 : eval(i, j, x);
    }
};

struct SwitchingProblem {
    ModeSet modes;
    DriverSpec driver;
    SwitchingCostSpec costs;
    double discount = 1.0;
    StateModelSpec state;
    AssumptionMode assumption = AssumptionMode::H2Prime;

    std::size_t m() const { return modes.m; }
};

enum class Severity { Pass, Warning, Failure };

std::string to_string(Severity s);

struct AssumptionCheck {
    std::string name;
    Severity status = Severity::Pass;
    std::string message;
    /// 1-based mode indices of the offending pair/triple, when applicable.
    std::vector<std::size_t> witness_modes;
    std::optional<double> witness_time;
    std::vector<double> witness_state;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;

    bool passed() const;  // no hard failure
    bool has_warnings() const;
    const AssumptionCheck* find(const std::string& name) const;
};

struct ValidationOptions {
    std::size_t sample_budget = 256;
    std::uint64_t seed = 0;
    double time_span = 10.0;   // t sampled in [0, time_span]
    double state_radius = 3.0; // x sampled in x0 +/- radius per component
    double value_radius = 10.0;
    double rel_tol = 1e-9;
};

/// Spot-checks [H1]-[H3] style hypotheses; deterministic in (problem, seed).
ValidationReport validate_assumptions(const SwitchingProblem& problem,
                                      const ValidationOptions& options);

struct DiscountBound {
    double penalization;  // sup(u^2 + u) + margin
    double contraction;   // sup 2u^2 + 1
    bool meets_penalization;
    bool meets_contraction;
};

DiscountBound required_discount(const SwitchingProblem& problem, double margin = 0.25);

/// Penalized driver f_i + n * sum_j (y^i - y^j + g_ij(x))^-.
double penalized_driver(const SwitchingProblem& problem, double n, std::size_t i,
                        const NodePoint& p, std::span<const double> ybar, double z);

inline double negative_part(double v) { return v < 0.0 ? -v : 0.0; }

}  // namespace rbsde

#pragma once

#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/reflect.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rbsde::harness {

inline constexpr int kConfigSchemaVersion = 1;

/// Registry form f_i = a_i + b_i x + e^{-beta t} (lambda sum_j A_ij ybar^j + c_i z),
/// with x optionally clamped to [clip_lo, clip_hi] before the slope is applied.
/// kind is one of constant, affine, exp-coupling, linear; they differ only in which
/// fields they accept and in their defaults.
struct DriverConfig {
    std::string kind = "constant";
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    double lambda = 0.0;
    double beta = 0.0;
    std::vector<std::vector<double>> matrix;
    double window_end = std::numeric_limits<double>::infinity();
    std::optional<double> bound;
    std::optional<std::pair<double, double>> clip;
};

struct CostConfig {
    std::string kind = "uniform";  // uniform | table
    double value = 0.0;
    std::vector<std::vector<double>> matrix;
};

struct LatticeConfig {
    StateKind kind = StateKind::DeterministicPath;
    std::vector<double> x0 = {0.0};
    double drift = 0.0;
    double volatility = 0.0;
    std::optional<std::size_t> steps;
    std::optional<double> dt;
    std::optional<double> tail_tolerance;
    std::optional<double> horizon;
};

struct SolverConfig {
    Backend backend = Backend::Projection;
    std::vector<double> penalty_schedule = doubling_schedule(64);
    double fixed_point_tol = 1e-8;
    std::size_t max_iters = 30;
    double inner_tol = 1e-12;
    std::size_t inner_max_iters = 50;
    bool cross_validate = true;
};

struct OracleConfig {
    std::optional<std::size_t> switch_budget;  // default: number of modes
    std::size_t strategy_samples = 50;
    double switch_probability = 0.01;
};

struct VerifyConfig {
    std::size_t probe_pairs = 10;
};

struct RunConfig {
    int schema_version = kConfigSchemaVersion;
    std::string name = "unnamed";
    std::uint64_t seed = 0;
    std::size_t modes = 1;
    double discount = 0.0;
    AssumptionMode assumption = AssumptionMode::H2Prime;
    DriverConfig driver;
    CostConfig costs;
    LatticeConfig lattice;
    SolverConfig solver;
    OracleConfig oracle;
    VerifyConfig verify;

    std::size_t switch_budget() const { return oracle.switch_budget.value_or(modes); }
};

/// Parses a config document. Errors name the offending field (or line and column
/// for syntax errors) and are raised as ConfigError.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");

/// Loads a config from a file path, or from a bundled preset when no such file exists.
RunConfig load_config(const std::string& path_or_preset);

std::vector<std::string> preset_names();
std::optional<std::string_view> preset_text(std::string_view name);

/// Fully resolved config, defaults included.
nlohmann::ordered_json to_json(const RunConfig& config);

SwitchingProblem build_problem(const RunConfig& config);

/// Horizon and grid from the lattice section; `refine` multiplies the step count.
TimeGrid build_grid(const RunConfig& config, std::size_t refine = 1);

}  // namespace rbsde::harness

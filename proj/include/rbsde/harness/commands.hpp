#pragma once

#include "rbsde/harness/config.hpp"
#include "rbsde/harness/report.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rbsde::harness {

struct CommandOptions {
    std::optional<std::uint64_t> seed;  // overrides config.seed
    bool timing = false;
    std::optional<std::string> csv_path;  // value table sidecar
};

/// validate -> lattice -> fixed point (coupled drivers) or reflected solve ->
/// diagnostics. Validation failures end the run early with a failing report.
SolveReport cmd_solve(const RunConfig& config, const CommandOptions& options = {});

/// cmd_solve plus representation, penalty decay, contraction probe and backend
/// agreement checks.
SolveReport cmd_verify(const RunConfig& config, const CommandOptions& options = {});

struct ConvergenceRow {
    std::size_t level = 0;
    std::size_t steps = 0;
    double dt = 0.0;
    std::vector<double> y0;
    std::vector<double> z0;
    std::optional<double> delta;  // max_i |Y0 - Y0(previous level)|
    std::optional<double> order;  // log2(delta_prev / delta)
};

struct ConvergenceTable {
    std::size_t modes = 1;
    std::vector<ConvergenceRow> rows;

    std::string to_csv() const;
};

/// Re-solves with the step count doubled per level. levels < 2 is rejected.
ConvergenceTable cmd_convergence(const RunConfig& config, std::size_t levels);

}  // namespace rbsde::harness

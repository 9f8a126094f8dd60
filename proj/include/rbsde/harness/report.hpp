#pragma once

#include "rbsde/problem.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rbsde::harness {

inline constexpr int kReportSchemaVersion = 1;

struct Check {
    std::string name;
    Severity status = Severity::Pass;
    std::string detail;
    std::optional<double> value;
    std::optional<double> threshold;
};

struct SolveReport {
    std::string command;
    nlohmann::ordered_json config;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
    std::vector<Check> checks;
    /// Wall-clock seconds per phase; only filled when timing was requested so that
    /// default reports stay byte-identical between runs.
    std::optional<nlohmann::ordered_json> timing;

    bool passed() const;  // no check failed; warnings are fine
    const Check* find(const std::string& name) const;
    void add(Check c) { checks.push_back(std::move(c)); }

    nlohmann::ordered_json to_json() const;
    std::string dump() const;  // 2-space indented, trailing newline
};

/// Pass when value <= threshold, Failure otherwise.
Check bound_check(std::string name, double value, double threshold, std::string detail = {});

}  // namespace rbsde::harness

#include "rbsde/harness/report.hpp"

#include <algorithm>

namespace rbsde::harness {

bool SolveReport::passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const Check& c) { return c.status == Severity::Failure; });
}

const Check* SolveReport::find(const std::string& name) const {
    for (const Check& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

nlohmann::ordered_json SolveReport::to_json() const {
    nlohmann::ordered_json out;
    out["schema_version"] = kReportSchemaVersion;
    out["command"] = command;
    out["config"] = config;
    out["results"] = results;
    out["diagnostics"] = diagnostics;
    auto& list = out["checks"] = nlohmann::ordered_json::array();
    for (const Check& c : checks) {
        nlohmann::ordered_json j;
        j["name"] = c.name;
        j["status"] = to_string(c.status);
        if (c.value) j["value"] = *c.value;
        if (c.threshold) j["threshold"] = *c.threshold;
        if (!c.detail.empty()) j["detail"] = c.detail;
        list.push_back(std::move(j));
    }
    out["passed"] = passed();
    if (timing) out["timing"] = *timing;
    return out;
}

std::string SolveReport::dump() const { return to_json().dump(2) + "\n"; }

Check bound_check(std::string name, double value, double threshold, std::string detail) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.detail = std::move(detail);
    c.status = value <= threshold ? Severity::Pass : Severity::Failure;
    return c;
}

}  // namespace rbsde::harness

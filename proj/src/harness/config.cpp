#include "rbsde/harness/config.hpp"

#include "rbsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rbsde::harness {

namespace detail {
struct PresetEntry {
    std::string_view name;
    std::string_view text;
};
extern const PresetEntry kPresets[];
extern const std::size_t kPresetCount;
}  // namespace detail

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

// Reads keys from one JSON object and rejects the ones nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string child(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    double number(const std::string& key) {
        if (!has(key)) fail(child(key), "missing required field");
        return as_number(raw(key), child(key));
    }
    double number(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }
    std::optional<double> maybe_number(const std::string& key) {
        if (!has(key) || j_.at(key).is_null()) {
            if (has(key)) seen_.insert(key);
            return std::nullopt;
        }
        return number(key);
    }

    std::size_t count(const std::string& key) {
        if (!has(key)) fail(child(key), "missing required field");
        const json& v = raw(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            fail(child(key), "expected a nonnegative integer");
        }
        return v.get<std::size_t>();
    }
    std::size_t count(const std::string& key, std::size_t fallback) {
        return has(key) ? count(key) : fallback;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) fail(child(key), "expected a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) fail(child(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> vector(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) fail(child(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t q = 0; q < v.size(); ++q) {
            out.push_back(as_number(v[q], child(key) + "[" + std::to_string(q) + "]"));
        }
        return out;
    }

    std::vector<std::vector<double>> matrix(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) fail(child(key), "expected an array of rows");
        std::vector<std::vector<double>> out;
        for (std::size_t q = 0; q < v.size(); ++q) {
            const std::string row_path = child(key) + "[" + std::to_string(q) + "]";
            if (!v[q].is_array()) fail(row_path, "expected an array of numbers");
            std::vector<double> row;
            for (std::size_t s = 0; s < v[q].size(); ++s) {
                row.push_back(as_number(v[q][s], row_path + "[" + std::to_string(s) + "]"));
            }
            out.push_back(std::move(row));
        }
        return out;
    }

    Section section(const std::string& key) { return Section(raw(key), child(key)); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail(child(it.key()), "unknown field");
        }
    }

private:
    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) fail(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(path, "expected a finite number");
        return d;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> sized(std::vector<double> v, std::size_t m, const std::string& path) {
    if (v.size() == 1 && m > 1) v.assign(m, v[0]);
    if (v.size() != m) {
        fail(path, "expected " + std::to_string(m) + " entries, one per mode");
    }
    return v;
}

void check_square(const std::vector<std::vector<double>>& a, std::size_t m,
                  const std::string& path) {
    if (a.size() != m ||
        std::any_of(a.begin(), a.end(), [m](const auto& row) { return row.size() != m; })) {
        fail(path, "expected a " + std::to_string(m) + "x" + std::to_string(m) + " matrix");
    }
}

DriverConfig parse_driver(Section s, std::size_t m) {
    DriverConfig d;
    d.kind = s.text("kind", "constant");
    const std::set<std::string> kinds = {"constant", "affine", "exp-coupling", "linear"};
    if (!kinds.count(d.kind)) {
        fail(s.child("kind"), "unknown driver kind '" + d.kind +
                                  "' (expected constant, affine, exp-coupling or linear)");
    }
    const bool constant = d.kind == "constant";
    const auto reject = [&](const char* key) {
        if (s.has(key)) fail(s.child(key), "not accepted by driver kind '" + d.kind + "'");
    };

    if (constant && s.has("values")) {
        d.a = sized(s.vector("values"), m, s.child("values"));
    } else if (s.has("intercept")) {
        d.a = sized(s.vector("intercept"), m, s.child("intercept"));
    } else if (d.kind == "exp-coupling" && s.has("base")) {
        d.a = sized(s.vector("base"), m, s.child("base"));
    } else {
        fail(s.child(constant ? "values" : "intercept"), "missing required field");
    }
    d.b.assign(m, 0.0);
    d.c.assign(m, 0.0);
    d.matrix.assign(m, std::vector<double>(m, 0.0));

    if (constant) {
        for (const char* key :
             {"slope", "z", "lambda", "decay", "matrix", "own", "window_end", "clip"}) {
            reject(key);
        }
    }
    if (s.has("slope")) d.b = sized(s.vector("slope"), m, s.child("slope"));
    if (s.has("z")) d.c = sized(s.vector("z"), m, s.child("z"));
    if (s.has("clip")) {
        if (constant) reject("clip");
        const auto v = s.vector("clip");
        if (v.size() != 2 || !(v[0] < v[1])) fail(s.child("clip"), "expected [lo, hi] with lo < hi");
        d.clip = std::make_pair(v[0], v[1]);
    }

    if (d.kind == "affine") {
        for (const char* key : {"lambda", "decay", "matrix"}) reject(key);
        if (s.has("own")) {
            const auto own = sized(s.vector("own"), m, s.child("own"));
            for (std::size_t i = 0; i < m; ++i) d.matrix[i][i] = own[i];
            d.lambda = 1.0;
        }
    } else if (!constant) {
        reject("own");
        d.lambda = s.number("lambda", 0.0);
        d.beta = s.number("decay", d.kind == "exp-coupling" ? 1.0 : 0.0);
        if (d.beta < 0.0) fail(s.child("decay"), "must be nonnegative");
        if (s.has("matrix")) {
            d.matrix = s.matrix("matrix");
            check_square(d.matrix, m, s.child("matrix"));
        } else if (d.kind == "exp-coupling") {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (i != j) d.matrix[i][j] = 1.0 / static_cast<double>(m - 1);
                }
            }
        } else if (d.lambda != 0.0) {
            fail(s.child("matrix"), "required when lambda is nonzero");
        }
        if (s.has("window_end")) {
            const auto w = s.maybe_number("window_end");
            if (w) {
                if (*w <= 0.0) fail(s.child("window_end"), "must be positive");
                d.window_end = *w;
            }
        }
    }
    if (const auto b = s.maybe_number("bound")) {
        if (*b < 0.0) fail(s.child("bound"), "must be nonnegative");
        d.bound = b;
    }
    s.finish();
    return d;
}

CostConfig parse_costs(Section s, std::size_t m) {
    CostConfig c;
    c.kind = s.text("kind", "uniform");
    if (c.kind == "uniform") {
        c.value = s.number("value");
    } else if (c.kind == "table") {
        c.matrix = s.matrix("matrix");
        check_square(c.matrix, m, s.child("matrix"));
    } else {
        fail(s.child("kind"), "unknown cost kind '" + c.kind + "' (expected uniform or table)");
    }
    s.finish();
    return c;
}

LatticeConfig parse_lattice(Section s) {
    LatticeConfig l;
    const std::string kind = s.text("kind", "deterministic");
    try {
        l.kind = state_kind_from_string(kind);
    } catch (const InvalidArgument&) {
        fail(s.child("kind"),
             "unknown lattice kind '" + kind + "' (expected deterministic, binomial or trinomial)");
    }
    if (s.has("x0")) {
        const json& v = s.raw("x0");
        if (v.is_number()) {
            l.x0 = {v.get<double>()};
        } else {
            l.x0 = s.vector("x0");
            if (l.x0.empty()) fail(s.child("x0"), "needs at least one component");
        }
    }
    l.drift = s.number("drift", 0.0);
    l.volatility = s.number("volatility", 0.0);
    if (l.volatility < 0.0) fail(s.child("volatility"), "must be nonnegative");
    if (l.kind == StateKind::DeterministicPath && l.volatility != 0.0) {
        fail(s.child("volatility"), "a deterministic lattice has no volatility");
    }
    if (s.has("steps") && s.has("dt")) fail(s.child("dt"), "give either steps or dt, not both");
    if (s.has("steps")) {
        l.steps = s.count("steps");
        if (*l.steps == 0) fail(s.child("steps"), "must be at least 1");
    }
    if (s.has("dt")) {
        l.dt = s.number("dt");
        if (*l.dt <= 0.0) fail(s.child("dt"), "must be positive");
    }
    if (s.has("tail_tolerance") && s.has("horizon")) {
        fail(s.child("horizon"), "give either tail_tolerance or horizon, not both");
    }
    if (s.has("tail_tolerance")) {
        l.tail_tolerance = s.number("tail_tolerance");
        if (*l.tail_tolerance <= 0.0) fail(s.child("tail_tolerance"), "must be positive");
    }
    if (s.has("horizon")) {
        l.horizon = s.number("horizon");
        if (*l.horizon <= 0.0) fail(s.child("horizon"), "must be positive");
    }
    s.finish();
    return l;
}

SolverConfig parse_solver(Section s) {
    SolverConfig o;
    const std::string backend = s.text("backend", "projection");
    try {
        o.backend = backend_from_string(backend);
    } catch (const InvalidArgument&) {
        fail(s.child("backend"),
             "unknown backend '" + backend + "' (expected projection or penalization)");
    }
    if (s.has("penalty_schedule")) {
        const json& v = s.raw("penalty_schedule");
        if (v.is_number()) {
            const double n_max = v.get<double>();
            if (n_max < 1.0) fail(s.child("penalty_schedule"), "n_max must be at least 1");
            o.penalty_schedule = doubling_schedule(n_max);
        } else {
            o.penalty_schedule = s.vector("penalty_schedule");
            if (o.penalty_schedule.empty()) fail(s.child("penalty_schedule"), "must not be empty");
            for (std::size_t q = 0; q < o.penalty_schedule.size(); ++q) {
                if (o.penalty_schedule[q] <= 0.0 ||
                    (q > 0 && o.penalty_schedule[q] <= o.penalty_schedule[q - 1])) {
                    fail(s.child("penalty_schedule"), "must be positive and strictly increasing");
                }
            }
        }
    }
    o.fixed_point_tol = s.number("fixed_point_tol", o.fixed_point_tol);
    o.max_iters = s.count("max_iters", o.max_iters);
    o.inner_tol = s.number("inner_tol", o.inner_tol);
    o.inner_max_iters = s.count("inner_max_iters", o.inner_max_iters);
    o.cross_validate = s.flag("cross_validate", o.cross_validate);
    if (o.fixed_point_tol <= 0.0) fail(s.child("fixed_point_tol"), "must be positive");
    if (o.inner_tol <= 0.0) fail(s.child("inner_tol"), "must be positive");
    if (o.max_iters == 0) fail(s.child("max_iters"), "must be at least 1");
    if (o.inner_max_iters == 0) fail(s.child("inner_max_iters"), "must be at least 1");
    s.finish();
    return o;
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "at line L, column C" in the message.
        throw ConfigError(std::string(source) + ": " + e.what());
    }
    RunConfig cfg;
    Section root(doc, "");
    if (root.has("schema_version")) {
        cfg.schema_version = static_cast<int>(root.count("schema_version"));
        if (cfg.schema_version != kConfigSchemaVersion) {
            fail("schema_version", "unsupported version " + std::to_string(cfg.schema_version));
        }
    }
    cfg.name = root.text("name", cfg.name);
    if (root.has("seed")) cfg.seed = root.count("seed");

    if (!root.has("problem")) fail("problem", "missing required field");
    Section problem = root.section("problem");
    cfg.modes = problem.count("modes");
    if (cfg.modes == 0) fail("problem.modes", "must be at least 1");
    cfg.discount = problem.number("discount");
    if (cfg.discount <= 0.0) fail("problem.discount", "must be positive");
    const std::string assumption = problem.text("assumption_mode", "H2-prime");
    if (assumption == "H2-prime" || assumption == "H2'") {
        cfg.assumption = AssumptionMode::H2Prime;
    } else if (assumption == "H2") {
        cfg.assumption = AssumptionMode::H2;
    } else {
        fail("problem.assumption_mode", "expected H2 or H2-prime");
    }
    if (!problem.has("driver")) fail("problem.driver", "missing required field");
    cfg.driver = parse_driver(problem.section("driver"), cfg.modes);
    if (problem.has("costs")) {
        cfg.costs = parse_costs(problem.section("costs"), cfg.modes);
    } else if (cfg.modes > 1) {
        fail("problem.costs", "missing required field");
    }
    problem.finish();

    if (root.has("lattice")) cfg.lattice = parse_lattice(root.section("lattice"));
    if (root.has("solver")) cfg.solver = parse_solver(root.section("solver"));
    if (root.has("oracle")) {
        Section o = root.section("oracle");
        if (o.has("switch_budget")) cfg.oracle.switch_budget = o.count("switch_budget");
        cfg.oracle.strategy_samples = o.count("strategy_samples", cfg.oracle.strategy_samples);
        cfg.oracle.switch_probability = o.number("switch_probability", cfg.oracle.switch_probability);
        if (cfg.oracle.switch_probability < 0.0 || cfg.oracle.switch_probability > 1.0) {
            fail("oracle.switch_probability", "must lie in [0, 1]");
        }
        o.finish();
    }
    if (root.has("verify")) {
        Section v = root.section("verify");
        cfg.verify.probe_pairs = v.count("probe_pairs", cfg.verify.probe_pairs);
        v.finish();
    }
    root.finish();

    const bool has_slope = std::any_of(cfg.driver.b.begin(), cfg.driver.b.end(),
                                       [](double v) { return v != 0.0; });
    if (has_slope && !cfg.lattice.horizon && !cfg.driver.bound && !cfg.driver.clip) {
        fail("lattice.horizon",
             "required when the driver depends on x (or give problem.driver.bound)");
    }
    return cfg;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (std::size_t q = 0; q < detail::kPresetCount; ++q) {
        out.emplace_back(detail::kPresets[q].name);
    }
    return out;
}

std::optional<std::string_view> preset_text(std::string_view name) {
    for (std::size_t q = 0; q < detail::kPresetCount; ++q) {
        if (detail::kPresets[q].name == name) return detail::kPresets[q].text;
    }
    return std::nullopt;
}

RunConfig load_config(const std::string& path_or_preset) {
    std::ifstream in(path_or_preset);
    if (in) {
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), path_or_preset);
    }
    if (const auto text = preset_text(path_or_preset)) {
        return parse_config(*text, "preset " + path_or_preset);
    }
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError(path_or_preset + ": no such file or bundled preset (presets: " + known +
                      ")");
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
    using oj = nlohmann::ordered_json;
    oj driver;
    driver["kind"] = "linear";
    driver["intercept"] = cfg.driver.a;
    driver["slope"] = cfg.driver.b;
    driver["z"] = cfg.driver.c;
    driver["lambda"] = cfg.driver.lambda;
    driver["decay"] = cfg.driver.beta;
    driver["matrix"] = cfg.driver.matrix;
    if (std::isfinite(cfg.driver.window_end)) driver["window_end"] = cfg.driver.window_end;
    if (cfg.driver.bound) driver["bound"] = *cfg.driver.bound;
    if (cfg.driver.clip) driver["clip"] = {cfg.driver.clip->first, cfg.driver.clip->second};

    oj costs;
    costs["kind"] = cfg.costs.kind;
    if (cfg.costs.kind == "uniform") {
        costs["value"] = cfg.costs.value;
    } else {
        costs["matrix"] = cfg.costs.matrix;
    }

    const TimeGrid grid = build_grid(cfg);
    oj lattice;
    lattice["kind"] = to_string(cfg.lattice.kind);
    lattice["x0"] = cfg.lattice.x0;
    lattice["drift"] = cfg.lattice.drift;
    lattice["volatility"] = cfg.lattice.volatility;
    lattice["steps"] = grid.steps();
    lattice["horizon"] = grid.horizon();

    oj solver;
    solver["backend"] = to_string(cfg.solver.backend);
    solver["penalty_schedule"] = cfg.solver.penalty_schedule;
    solver["fixed_point_tol"] = cfg.solver.fixed_point_tol;
    solver["max_iters"] = cfg.solver.max_iters;
    solver["inner_tol"] = cfg.solver.inner_tol;
    solver["inner_max_iters"] = cfg.solver.inner_max_iters;
    solver["cross_validate"] = cfg.solver.cross_validate;

    oj out;
    out["schema_version"] = cfg.schema_version;
    out["name"] = cfg.name;
    out["seed"] = cfg.seed;
    out["problem"] = {{"modes", cfg.modes},
                      {"discount", cfg.discount},
                      {"assumption_mode", cfg.assumption == AssumptionMode::H2 ? "H2" : "H2-prime"},
                      {"driver", driver},
                      {"costs", costs}};
    out["lattice"] = lattice;
    out["solver"] = solver;
    out["oracle"] = {{"switch_budget", cfg.switch_budget()},
                     {"strategy_samples", cfg.oracle.strategy_samples},
                     {"switch_probability", cfg.oracle.switch_probability}};
    out["verify"] = {{"probe_pairs", cfg.verify.probe_pairs}};
    return out;
}

namespace {

// Largest |x| the first state component can reach on a grid with this horizon.
double state_reach(const LatticeConfig& l, const TimeGrid& grid) {
    const double T = grid.horizon();
    double spread = 0.0;
    if (l.kind == StateKind::Binomial) {
        spread = l.volatility * static_cast<double>(grid.steps()) * std::sqrt(grid.dt());
    } else if (l.kind == StateKind::Trinomial) {
        spread = l.volatility * static_cast<double>(grid.steps()) * std::sqrt(3.0 * grid.dt());
    }
    return std::abs(l.x0[0]) + std::abs(l.drift) * T + spread;
}

double zero_point_bound(const RunConfig& cfg, const TimeGrid* grid) {
    if (cfg.driver.bound) return *cfg.driver.bound;
    double xmax = grid ? state_reach(cfg.lattice, *grid) : 0.0;
    if (cfg.driver.clip) {
        const double lim = std::max(std::abs(cfg.driver.clip->first), std::abs(cfg.driver.clip->second));
        xmax = grid ? std::min(xmax, lim) : lim;
    }
    double b = 0.0;
    for (std::size_t i = 0; i < cfg.modes; ++i) {
        b = std::max(b, std::abs(cfg.driver.a[i]) + std::abs(cfg.driver.b[i]) * xmax);
    }
    return b;
}

}  // namespace

TimeGrid build_grid(const RunConfig& cfg, std::size_t refine) {
    if (refine == 0) throw InvalidArgument("refinement factor must be at least 1");
    double T;
    if (cfg.lattice.horizon) {
        T = *cfg.lattice.horizon;
    } else {
        const double tol = cfg.lattice.tail_tolerance.value_or(1e-4);
        const double bf = zero_point_bound(cfg, nullptr);
        if (bf <= 0.0) {
            fail("lattice.horizon",
                 "the tail tolerance gives T = 0 for a driver vanishing at zero; give a horizon");
        }
        T = truncate_horizon(cfg.discount, bf, tol);
        if (T <= 0.0) {
            fail("lattice.tail_tolerance", "gives T = 0; tighten the tolerance or give a horizon");
        }
    }
    std::size_t n;
    if (cfg.lattice.steps) {
        n = *cfg.lattice.steps;
    } else {
        const double dt = cfg.lattice.dt.value_or(0.01);
        n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
        n = std::max<std::size_t>(n, 1);
        T = static_cast<double>(n) * dt;
    }
    return TimeGrid(T, n * refine, cfg.discount);
}

SwitchingProblem build_problem(const RunConfig& cfg) {
    const std::size_t m = cfg.modes;
    SwitchingProblem p;
    p.modes = ModeSet{m};
    p.discount = cfg.discount;
    p.assumption = cfg.assumption;

    const DriverConfig d = cfg.driver;
    double level = 0.0;
    bool cross = false, own = false, zdep = false;
    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double aij = d.lambda * d.matrix[i][j];
            row += aij * aij;
            if (aij != 0.0) (i == j ? own : cross) = true;
        }
        if (d.c[i] != 0.0) zdep = true;
        level = std::max(level, std::sqrt(row) + std::abs(d.c[i]));
    }
    if (level == 0.0) {
        p.driver.lipschitz = LipschitzModulus::zero();
    } else if (d.beta > 0.0) {
        p.driver.lipschitz = LipschitzModulus::exponential(level, d.beta);
    } else {
        p.driver.lipschitz = LipschitzModulus::window(level, d.window_end);
    }
    p.driver.cross_mode_y = cross;
    p.driver.own_y = own;
    p.driver.z_dependent = zdep;
    p.driver.retain_own_y = own;
    const bool needs_grid = std::any_of(d.b.begin(), d.b.end(), [](double v) { return v != 0.0; });
    if (needs_grid && !d.bound && !d.clip) {
        const TimeGrid grid = build_grid(cfg);
        p.driver.zero_bound = zero_point_bound(cfg, &grid);
    } else {
        p.driver.zero_bound = zero_point_bound(cfg, nullptr);
    }
    const bool window = d.beta == 0.0;
    const double window_end = d.window_end;
    p.driver.eval = [d, m, window, window_end](std::size_t i, const NodePoint& pt,
                                               std::span<const double> ybar, double z) {
        const double x = d.clip ? std::clamp(pt.x[0], d.clip->first, d.clip->second) : pt.x[0];
        double v = d.a[i] + d.b[i] * x;
        double couple = 0.0;
        if (d.lambda != 0.0) {
            for (std::size_t j = 0; j < m; ++j) couple += d.matrix[i][j] * ybar[j];
            couple *= d.lambda;
        }
        couple += d.c[i] * z;
        const double w = window ? (pt.t <= window_end ? 1.0 : 0.0) : std::exp(-d.beta * pt.t);
        return v + w * couple;
    };

    if (cfg.costs.kind == "uniform") {
        const double g = cfg.costs.value;
        p.costs.eval = [g](std::size_t, std::size_t, std::span<const double>) { return g; };
        p.costs.diagonal = 0.0;
        p.costs.bound = std::abs(g);
    } else {
        const auto table = cfg.costs.matrix;
        p.costs.eval = [table](std::size_t i, std::size_t j, std::span<const double>) {
            return table[i][j];
        };
        double diag = 0.0, bound = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double gii = table[i][i];
            if (gii < diag || (diag >= 0.0 && gii > diag)) diag = gii;
            for (std::size_t j = 0; j < m; ++j) {
                if (i != j) bound = std::max(bound, std::abs(table[i][j]));
            }
        }
        p.costs.diagonal = diag;
        p.costs.bound = bound;
    }

    StateModelSpec& st = p.state;
    st.kind = cfg.lattice.kind;
    st.x0 = cfg.lattice.x0;
    const double mu = cfg.lattice.drift;
    const double sigma = cfg.lattice.volatility;
    st.drift = [mu](double) { return mu; };
    st.volatility = [sigma](double) { return sigma; };
    return p;
}

}  // namespace rbsde::harness

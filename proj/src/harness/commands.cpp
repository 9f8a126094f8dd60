#include "rbsde/harness/commands.hpp"

#include "rbsde/coupling.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/switching.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace rbsde::harness {

namespace {

using oj = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr double kObstacleTol = 1e-12;
constexpr double kProjectionSkorokhodTol = 1e-10;
constexpr double kPenaltySkorokhodTol = 1e-2;
constexpr double kPenaltyViolationTol = 5e-2;
constexpr double kMonotoneTol = 1e-10;
constexpr double kOracleTol = 1e-6;

double max_abs(const std::vector<double>& v) {
    double out = 0.0;
    for (double x : v) out = std::max(out, std::abs(x));
    return out;
}

std::vector<double> root_values(const NodeField& f) {
    const auto s = f.at(0, 0);
    return {s.begin(), s.end()};
}

// Everything cmd_solve computes, kept around for cmd_verify.
struct Run {
    RunConfig cfg;
    SwitchingProblem problem;
    std::unique_ptr<Lattice> lattice;
    SwitchingProblem decoupled;  // problem itself, or frozen at the solution
    SolutionField solution;
    std::optional<ReflectResult> projection;
    std::optional<ReflectResult> penalization;
    std::optional<CouplingState> coupling;
    DiscountBound bound{};
    bool validated = false;
    SolveReport report;
    std::vector<std::pair<std::string, double>> timing;
};

class Stopwatch {
public:
    Stopwatch(Run& run, std::string name) : run_(run), name_(std::move(name)), t0_(Clock::now()) {}
    ~Stopwatch() {
        run_.timing.emplace_back(
            name_, std::chrono::duration<double>(Clock::now() - t0_).count());
    }

private:
    Run& run_;
    std::string name_;
    Clock::time_point t0_;
};

InnerSolverOptions inner_options(const RunConfig& cfg) {
    return {cfg.solver.inner_tol, cfg.solver.inner_max_iters};
}

oj validation_json(const ValidationReport& v) {
    oj out = oj::array();
    for (const AssumptionCheck& c : v.checks) {
        oj j;
        j["name"] = c.name;
        j["status"] = to_string(c.status);
        if (!c.message.empty()) j["message"] = c.message;
        if (!c.witness_modes.empty()) j["witness_modes"] = c.witness_modes;
        if (c.witness_time) j["witness_time"] = *c.witness_time;
        if (!c.witness_state.empty()) j["witness_state"] = c.witness_state;
        out.push_back(std::move(j));
    }
    return out;
}

oj trace_json(const PenaltyDiagnostics& trace) {
    oj out = oj::array();
    for (const PenaltyLevel& l : trace.levels) {
        oj j;
        j["n"] = l.n;
        j["violation"] = l.violation_total;
        j["scaled_violation"] = l.scaled;
        j["sup_violation"] = l.sup_violation;
        j["exclusivity"] = l.exclusivity;
        j["skorokhod"] = l.skorokhod;
        j["y0"] = l.y0;
        if (std::isfinite(l.min_increment)) j["min_increment"] = l.min_increment;
        out.push_back(std::move(j));
    }
    return out;
}

void penalty_checks(Run& run) {
    const PenaltyDiagnostics& trace = *run.penalization->trace;
    SolveReport& rep = run.report;
    const PenaltyLevel& last = trace.levels.back();

    // Violation sup must shrink along the schedule and end small.
    bool sup_monotone = true;
    bool sk_monotone = true;
    double min_inc = std::numeric_limits<double>::infinity();
    double excl = 0.0;
    for (std::size_t q = 0; q < trace.levels.size(); ++q) {
        const PenaltyLevel& l = trace.levels[q];
        min_inc = std::min(min_inc, l.min_increment);
        excl = std::max(excl, l.exclusivity);
        if (q == 0) continue;
        const PenaltyLevel& prev = trace.levels[q - 1];
        if (l.sup_violation > prev.sup_violation * (1.0 + 1e-9) + 1e-15) sup_monotone = false;
        if (max_abs(l.skorokhod) > max_abs(prev.skorokhod) * (1.0 + 1e-9) + 1e-15) {
            sk_monotone = false;
        }
    }
    Check viol = bound_check("penalization.obstacle_violation", last.sup_violation,
                             kPenaltyViolationTol, "sup violation at the final level");
    if (!sup_monotone) {
        viol.status = Severity::Failure;
        viol.detail = "sup violation increased along the schedule";
    }
    rep.add(viol);

    Check sk = bound_check("penalization.skorokhod", max_abs(last.skorokhod),
                           kPenaltySkorokhodTol, "max |residual| at the final level");
    if (!sk_monotone) {
        sk.status = Severity::Failure;
        sk.detail = "|residual| increased along the schedule";
    }
    rep.add(sk);

    if (trace.levels.size() > 1) {
        rep.add(bound_check("penalization.monotone", -min_inc, kMonotoneTol,
                            "max decrease of Y between consecutive levels"));
    }
    rep.add(bound_check("penalization.exclusivity", excl, 0.0,
                        "max (Y^ij)^- (Y^ji)^- over all grid points and levels"));
}

void solve_pipeline(Run& run, bool force_cross) {
    const RunConfig& cfg = run.cfg;
    SolveReport& rep = run.report;
    rep.config = to_json(cfg);
    run.problem = build_problem(cfg);
    const TimeGrid grid = build_grid(cfg);

    ValidationOptions vopt;
    vopt.seed = cfg.seed;
    vopt.time_span = grid.horizon();
    ValidationReport validation;
    {
        Stopwatch sw(run, "validate");
        validation = validate_assumptions(run.problem, vopt);
    }
    rep.diagnostics["validation"] = validation_json(validation);
    {
        Check c{"validation", Severity::Pass, {}, {}, {}};
        if (!validation.passed()) {
            c.status = Severity::Failure;
            for (const auto& a : validation.checks) {
                if (a.status == Severity::Failure) {
                    c.detail = a.name + ": " + a.message;
                    break;
                }
            }
        } else if (validation.has_warnings()) {
            c.status = Severity::Warning;
            for (const auto& a : validation.checks) {
                if (a.status == Severity::Warning) {
                    c.detail = a.name + ": " + a.message;
                    break;
                }
            }
        }
        rep.add(c);
    }
    if (!validation.passed()) return;
    run.validated = true;

    run.bound = required_discount(run.problem);
    rep.diagnostics["required_discount"] = {{"penalization", run.bound.penalization},
                                            {"contraction", run.bound.contraction},
                                            {"meets_penalization", run.bound.meets_penalization},
                                            {"meets_contraction", run.bound.meets_contraction}};

    {
        Stopwatch sw(run, "lattice");
        run.lattice = std::make_unique<Lattice>(build_lattice(run.problem.state, grid));
    }
    const Lattice& lat = *run.lattice;
    const InnerSolverOptions inner = inner_options(cfg);

    ReflectOptions ropt;
    ropt.schedule = cfg.solver.penalty_schedule;
    ropt.inner = inner;

    if (run.problem.driver.cross_mode_y) {
        Stopwatch sw(run, "fixed_point");
        FixedPointOptions fopt;
        fopt.tol = cfg.solver.fixed_point_tol;
        fopt.max_iters = cfg.solver.max_iters;
        fopt.inner = inner;
        FixedPointResult fp = fixed_point_solve(run.problem, lat, fopt);
        run.solution = fp.solution;
        run.coupling = fp.state;
        run.decoupled =
            freeze_problem(run.problem, std::make_shared<const NodeField>(fp.solution.Y));
        run.projection = ReflectResult{fp.solution, std::nullopt, 0};
        const CouplingState& cs = *run.coupling;
        rep.diagnostics["fixed_point"] = {{"iterations", cs.iterations},
                                          {"errors", cs.errors},
                                          {"rate", cs.rate},
                                          {"rates", cs.rates},
                                          {"norm", to_string(cs.method)},
                                          {"converged", cs.converged},
                                          {"warnings", cs.warnings}};
        Check c{"fixed_point.converged", cs.converged ? Severity::Pass : Severity::Failure,
                std::to_string(cs.iterations) + " iterations", cs.errors.empty() ? 0.0 : cs.errors.back(),
                cfg.solver.fixed_point_tol};
        rep.add(c);
        if (cfg.solver.cross_validate || force_cross) {
            ropt.backend = Backend::Penalization;
            run.penalization = solve_reflected(run.decoupled, lat, ropt);
        }
    } else {
        run.decoupled = run.problem;
        Stopwatch sw(run, "reflect");
        ropt.backend = cfg.solver.backend;
        ReflectResult primary = solve_reflected(run.problem, lat, ropt);
        run.solution = primary.solution;
        (cfg.solver.backend == Backend::Projection ? run.projection : run.penalization) =
            std::move(primary);
        if (cfg.solver.cross_validate || force_cross) {
            ropt.backend = cfg.solver.backend == Backend::Projection ? Backend::Penalization
                                                                     : Backend::Projection;
            ReflectResult other = solve_reflected(run.problem, lat, ropt);
            (ropt.backend == Backend::Projection ? run.projection : run.penalization) =
                std::move(other);
        }
    }

    const std::size_t m = run.problem.m();
    rep.results["backend"] = run.coupling ? "fixed-point" : to_string(cfg.solver.backend);
    rep.results["horizon"] = grid.horizon();
    rep.results["steps"] = grid.steps();
    rep.results["dt"] = grid.dt();
    rep.results["Y0"] = root_values(run.solution.Y);
    rep.results["Z0"] = root_values(run.solution.Z);
    const KDiagnostics kd = k_diagnostics(run.solution, lat);
    rep.results["K_total_variation"] = kd.total_variation;

    if (run.projection) {
        const SolutionField& s = run.projection->solution;
        const double viol = obstacle_violation(s.Y, run.decoupled, lat);
        const auto sk = skorokhod_residual(s, run.decoupled, lat);
        const KDiagnostics pk = k_diagnostics(s, lat);
        rep.diagnostics["projection"] = {{"obstacle_violation", viol},
                                         {"skorokhod", sk},
                                         {"min_dK", pk.min_increment},
                                         {"passes", run.projection->projection_passes}};
        rep.add(bound_check("projection.obstacle_violation", viol, kObstacleTol));
        rep.add(bound_check("projection.skorokhod", max_abs(sk), kProjectionSkorokhodTol));
        rep.add(bound_check("projection.K_increasing", -pk.min_increment, 0.0,
                            "largest negative K increment"));
    }
    if (run.penalization) {
        rep.diagnostics["penalty_trace"] = trace_json(*run.penalization->trace);
        penalty_checks(run);
    }
    if (run.projection && run.penalization) {
        const auto a = root_values(run.projection->solution.Y);
        const auto b = root_values(run.penalization->solution.Y);
        double gap = 0.0;
        for (std::size_t i = 0; i < m; ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
        const double n_max = cfg.solver.penalty_schedule.back();
        rep.add(bound_check("backend_agreement", gap, std::max(1e-2, 10.0 / n_max),
                            "max |Y0 projection - Y0 penalization|"));
    }

    // Oracle comparison on the decoupled (or frozen) problem.
    if (run.projection) {
        Stopwatch sw(run, "oracle");
        OracleOptions oo;
        oo.budget = cfg.switch_budget();
        oo.inner = inner;
        const OracleResult orc = oracle_value(run.decoupled, lat, oo);
        const auto y0 = root_values(run.projection->solution.Y);
        std::vector<double> deltas(m);
        for (std::size_t i = 0; i < m; ++i) deltas[i] = std::abs(orc.value0[i] - y0[i]);
        rep.diagnostics["oracle"] = {{"budget", orc.budget},
                                     {"value0", orc.value0},
                                     {"deltas", deltas},
                                     {"stabilized", orc.stabilized},
                                     {"sufficient_budget", orc.sufficient_budget},
                                     {"budget_gaps", orc.budget_gaps}};
        rep.add(bound_check("oracle.agreement", max_abs(deltas), kOracleTol,
                            "max |Y0 - oracle value| at budget " + std::to_string(orc.budget)));
    }
}

void finish(Run& run, const CommandOptions& options) {
    if (options.timing) {
        oj t = oj::object();
        double total = 0.0;
        for (const auto& [name, secs] : run.timing) {
            t[name] = t.contains(name) ? t[name].get<double>() + secs : secs;
            total += secs;
        }
        t["total"] = total;
        run.report.timing = t;
    }
    if (options.csv_path && run.lattice) {
        std::ofstream out(*options.csv_path);
        if (!out) throw ConfigError(*options.csv_path + ": cannot open for writing");
        const Lattice& lat = *run.lattice;
        const std::size_t m = run.problem.m();
        out << "step,node,t,x";
        for (const char* f : {"Y", "Z", "dK"}) {
            for (std::size_t i = 0; i < m; ++i) out << ',' << f << '_' << i + 1;
        }
        out << '\n';
        out.precision(12);
        for (std::size_t k = 0; k <= lat.steps(); ++k) {
            for (std::size_t j = 0; j < lat.nodes(k); ++j) {
                out << k << ',' << j << ',' << lat.grid().time(k) << ',' << lat.state(k, j)[0];
                for (const NodeField* f :
                     {&run.solution.Y, &run.solution.Z, &run.solution.dK}) {
                    for (std::size_t i = 0; i < m; ++i) out << ',' << (*f)(i, k, j);
                }
                out << '\n';
            }
        }
    }
}

Run start(const RunConfig& config, const CommandOptions& options, const char* command) {
    Run run;
    run.cfg = config;
    if (options.seed) run.cfg.seed = *options.seed;
    run.report.command = command;
    return run;
}

}  // namespace

SolveReport cmd_solve(const RunConfig& config, const CommandOptions& options) {
    Run run = start(config, options, "solve");
    solve_pipeline(run, false);
    finish(run, options);
    return std::move(run.report);
}

SolveReport cmd_verify(const RunConfig& config, const CommandOptions& options) {
    Run run = start(config, options, "verify");
    solve_pipeline(run, true);
    if (!run.validated) {
        finish(run, options);
        return std::move(run.report);
    }
    const RunConfig& cfg = run.cfg;
    const Lattice& lat = *run.lattice;
    const InnerSolverOptions inner = inner_options(cfg);
    SolveReport& rep = run.report;
    const std::size_t m = run.problem.m();

    {
        Stopwatch sw(run, "representation");
        const auto strategies = sample_strategies(m, cfg.oracle.strategy_samples, cfg.seed,
                                                  cfg.oracle.switch_probability);
        OracleOptions oo;
        oo.budget = cfg.switch_budget();
        oo.inner = inner;
        const RepresentationReport rr =
            representation_check(run.decoupled, lat, run.projection->solution.Y, strategies, oo);
        rep.diagnostics["representation"] = {
            {"strategies", rr.sampled.size()},
            {"violations", rr.violations.size()},
            {"max_excess", std::isfinite(rr.max_excess) ? oj(rr.max_excess) : oj(nullptr)},
            {"oracle_delta", rr.oracle_delta},
            {"optimal_delta", rr.optimal_delta},
            {"stabilized", rr.oracle_stabilized},
            {"sufficient_budget", rr.sufficient_budget}};
        Check dom{"representation.domination", rr.dominated ? Severity::Pass : Severity::Failure,
                  std::to_string(rr.violations.size()) + " of " +
                      std::to_string(rr.sampled.size()) + " sampled strategies exceed Y0",
                  {}, 1e-8};
        if (std::isfinite(rr.max_excess)) dom.value = rr.max_excess;
        rep.add(dom);
        rep.add(bound_check("representation.oracle", rr.oracle_delta, 1e-6,
                            "max |oracle value - Y0|"));
        rep.add(bound_check("representation.optimal_strategy", max_abs(rr.optimal_delta), 1e-6,
                            "max |U0(a*) - Y0|"));
        Check stab{"representation.stabilization",
                   rr.oracle_stabilized ? Severity::Pass : Severity::Warning,
                   "sufficient switch budget " + std::to_string(rr.sufficient_budget) +
                       " of " + std::to_string(cfg.switch_budget()),
                   static_cast<double>(rr.sufficient_budget), static_cast<double>(cfg.switch_budget())};
        rep.add(stab);
    }

    if (run.penalization) {
        const DecayCheck dc = penalty_decay_check(*run.penalization->trace);
        rep.diagnostics["penalty_decay"] = {{"passed", dc.passed},
                                            {"max_scaled", dc.max_scaled},
                                            {"median_scaled", dc.median_scaled},
                                            {"reason", dc.reason}};
        Check c{"penalty_decay", dc.passed ? Severity::Pass : Severity::Failure, dc.reason,
                dc.max_scaled, 4.0 * dc.median_scaled};
        rep.add(c);
    }

    if (run.problem.driver.y_independent()) {
        rep.add(Check{"contraction_probe", Severity::Pass,
                      "drivers do not read y, so phi is constant", 0.0, 1.0});
    } else {
        Stopwatch sw(run, "contraction_probe");
        const ProbeResult pr =
            contraction_probe(run.problem, lat, cfg.verify.probe_pairs, cfg.seed, 0.0, inner);
        rep.diagnostics["contraction_probe"] = {{"max_ratio", pr.max_ratio},
                                                {"ratios", pr.ratios},
                                                {"skipped", pr.skipped},
                                                {"norm", to_string(pr.method)}};
        Check c{"contraction_probe", Severity::Pass, "max ratio over sampled pairs", pr.max_ratio,
                1.0};
        if (pr.max_ratio >= 1.0) {
            if (run.bound.meets_contraction) {
                c.status = Severity::Failure;
            } else {
                c.status = Severity::Warning;
                c.detail = "ratio >= 1 with r below the advisory contraction bound";
            }
        }
        rep.add(c);
    }
    finish(run, options);
    return std::move(run.report);
}

std::string ConvergenceTable::to_csv() const {
    std::ostringstream out;
    out.precision(12);
    out << "level,steps,dt";
    for (std::size_t i = 0; i < modes; ++i) out << ",Y0_" << i + 1;
    for (std::size_t i = 0; i < modes; ++i) out << ",Z0_" << i + 1;
    out << ",delta,order\n";
    for (const ConvergenceRow& r : rows) {
        out << r.level << ',' << r.steps << ',' << r.dt;
        for (double v : r.y0) out << ',' << v;
        for (double v : r.z0) out << ',' << v;
        out << ',';
        if (r.delta) out << *r.delta;
        out << ',';
        if (r.order) out << *r.order;
        out << '\n';
    }
    return out.str();
}

ConvergenceTable cmd_convergence(const RunConfig& config, std::size_t levels) {
    if (levels < 2) throw InvalidArgument("convergence study needs at least 2 levels");
    const SwitchingProblem problem = build_problem(config);
    ValidationOptions vopt;
    vopt.seed = config.seed;
    const ValidationReport v = validate_assumptions(problem, vopt);
    if (!v.passed()) {
        for (const auto& c : v.checks) {
            if (c.status == Severity::Failure) throw InvalidArgument(c.name + ": " + c.message);
        }
    }
    const InnerSolverOptions inner = inner_options(config);
    ConvergenceTable table;
    table.modes = problem.m();
    for (std::size_t level = 0; level < levels; ++level) {
        const TimeGrid grid = build_grid(config, std::size_t{1} << level);
        const Lattice lat = build_lattice(problem.state, grid);
        SolutionField sol;
        if (problem.driver.cross_mode_y) {
            FixedPointOptions fopt;
            fopt.tol = config.solver.fixed_point_tol;
            fopt.max_iters = config.solver.max_iters;
            fopt.inner = inner;
            sol = fixed_point_solve(problem, lat, fopt).solution;
        } else {
            ReflectOptions ropt;
            ropt.backend = config.solver.backend;
            ropt.schedule = config.solver.penalty_schedule;
            ropt.inner = inner;
            sol = solve_reflected(problem, lat, ropt).solution;
        }
        ConvergenceRow row;
        row.level = level;
        row.steps = grid.steps();
        row.dt = grid.dt();
        row.y0 = root_values(sol.Y);
        row.z0 = root_values(sol.Z);
        if (!table.rows.empty()) {
            const ConvergenceRow& prev = table.rows.back();
            double d = 0.0;
            for (std::size_t i = 0; i < row.y0.size(); ++i) {
                d = std::max(d, std::abs(row.y0[i] - prev.y0[i]));
            }
            row.delta = d;
            if (prev.delta && d > 0.0 && *prev.delta > 0.0) row.order = std::log2(*prev.delta / d);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace rbsde::harness

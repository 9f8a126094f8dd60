#include "rbsde/reflect.hpp"

#include "rbsde/detail/implicit_step.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rbsde {

std::vector<double> SolutionField::expected_K(const Lattice& lattice, std::size_t mode) const {
    std::vector<double> out(lattice.steps() + 1, 0.0);
    for (std::size_t k = 0; k < lattice.steps(); ++k) {
        const auto reach = lattice.reach(k);
        double inc = 0.0;
        for (std::size_t j = 0; j < lattice.nodes(k); ++j) inc += reach[j] * dK(mode, k, j);
        out[k + 1] = out[k] + inc;
    }
    return out;
}

std::vector<double> SolutionField::K_along(std::span<const std::size_t> path,
                                           std::size_t mode) const {
    std::vector<double> out(path.size(), 0.0);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        out[k + 1] = out[k] + dK(mode, k, path[k]);
    }
    return out;
}

std::string to_string(Backend b) {
    return b == Backend::Penalization ? "penalization" : "projection";
}

Backend backend_from_string(const std::string& name) {
    if (name == "penalization") return Backend::Penalization;
    if (name == "projection") return Backend::Projection;
    throw InvalidArgument("unknown backend '" + name + "'");
}

std::vector<double> doubling_schedule(double n_max) {
    std::vector<double> out;
    for (double n = 1.0; n <= n_max; n *= 2.0) out.push_back(n);
    return out;
}

namespace {

double obstacle_at(const SwitchingProblem& problem, std::span<const double> y, std::size_t i,
                   std::span<const double> x, int* arg = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < problem.m(); ++j) {
        if (j == i) continue;
        const double v = y[j] - problem.costs(i, j, x);
        if (v > best) {
            best = v;
            if (arg) *arg = static_cast<int>(j);
        }
    }
    return best;
}

std::vector<double> skorokhod_impl(const NodeField& Y, const NodeField& dK,
                                   const SwitchingProblem& problem, const Lattice& lattice) {
    const std::size_t m = problem.m();
    std::vector<double> out(m, 0.0);
    for (std::size_t k = 0; k < lattice.steps(); ++k) {
        const auto reach = lattice.reach(k);
        const double w = lattice.grid().weight(k);
        for (std::size_t j = 0; j < lattice.nodes(k); ++j) {
            const auto y = Y.at(k, j);
            const auto x = lattice.state(k, j);
            for (std::size_t i = 0; i < m; ++i) {
                const double dk = dK(i, k, j);
                if (dk == 0.0) continue;
                out[i] += reach[j] * w * (y[i] - obstacle_at(problem, y, i, x)) * dk;
            }
        }
    }
    return out;
}

void fill_penalty_diagnostics(const SwitchingProblem& problem, const Lattice& lattice,
                              const NodeField& Y, const NodeField& dK, PenaltyLevel& d) {
    const std::size_t m = problem.m();
    const double dt = lattice.grid().dt();
    d.violation.assign(m, 0.0);
    d.sup_violation = 0.0;
    d.exclusivity = 0.0;
    for (std::size_t k = 0; k <= lattice.steps(); ++k) {
        const auto reach = lattice.reach(k);
        for (std::size_t j = 0; j < lattice.nodes(k); ++j) {
            const auto y = Y.at(k, j);
            const auto x = lattice.state(k, j);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t l = 0; l < m; ++l) {
                    if (l == i) continue;
                    const double a = negative_part(y[i] - y[l] + problem.costs(i, l, x));
                    const double b = negative_part(y[l] - y[i] + problem.costs(l, i, x));
                    if (k < lattice.steps()) d.violation[i] += reach[j] * a * a * dt;
                    d.sup_violation = std::max(d.sup_violation, a);
                    d.exclusivity = std::max(d.exclusivity, a * b);
                }
            }
        }
    }
    d.violation_total = 0.0;
    for (double v : d.violation) d.violation_total += v;
    d.scaled = d.n * d.n * d.violation_total;
    d.skorokhod = skorokhod_impl(Y, dK, problem, lattice);
    d.y0.assign(Y.at(0, 0).begin(), Y.at(0, 0).end());
}

}  // namespace

PenalizedSolution solve_penalized(const SwitchingProblem& problem, const Lattice& lattice,
                                  double n, const InnerSolverOptions& inner,
                                  const NodeField* warm_start) {
    if (n < 0.0) throw InvalidArgument("penalty level must be nonnegative");
    const std::size_t m = problem.m();
    const std::size_t n_steps = lattice.steps();
    const TimeGrid& grid = lattice.grid();
    const double dt = grid.dt();
    const double r = problem.discount;
    if (warm_start && !warm_start->same_shape(NodeField(lattice, m))) {
        throw InvalidArgument("warm start field does not match the lattice");
    }

    PenalizedSolution out{{NodeField(lattice, m), NodeField(lattice, m)}, NodeField(lattice, m), {}};
    NodeField& Y = out.field.Y;
    NodeField& Z = out.field.Z;

    for (std::size_t kk = n_steps; kk-- > 0;) {
        const double t = grid.time(kk);
        const double w = grid.weight(kk);
        detail::check_step_size(dt, problem.driver.lipschitz(t) + n * static_cast<double>(m), r,
                                kk);
        const std::span<const double> next = Y.step(kk + 1);
        parallel_for(lattice.nodes(kk), [&](std::size_t j) {
            std::vector<double> cont(m), scratch;
            std::span<double> y = Y.at(kk, j);
            std::span<double> z = Z.at(kk, j);
            for (std::size_t i = 0; i < m; ++i) {
                cont[i] = lattice.cond_expect_at(kk, j, next, m, i);
                z[i] = lattice.cond_increment_at(kk, j, next, m, i);
                y[i] = warm_start ? (*warm_start)(i, kk, j) : cont[i];
            }
            const NodePoint p{t, lattice.state(kk, j), kk, j};
            detail::implicit_step(
                cont,
                [&](std::span<const double> yv, std::span<double> f) {
                    for (std::size_t i = 0; i < m; ++i) {
                        f[i] = penalized_driver(problem, n, i, p, yv, z[i]);
                    }
                },
                dt, r, y, inner.tol, inner.max_iters, scratch);
            for (std::size_t i = 0; i < m; ++i) {
                double pen = 0.0;
                for (std::size_t l = 0; l < m; ++l) {
                    pen += negative_part(y[i] - y[l] + problem.costs(i, l, p.x));
                }
                out.dK(i, kk, j) = n * w * pen * dt;
            }
        });
    }

    out.diagnostics.n = n;
    fill_penalty_diagnostics(problem, lattice, Y, out.dK, out.diagnostics);
    if (warm_start) {
        double min_inc = std::numeric_limits<double>::infinity();
        const auto a = Y.raw();
        const auto b = warm_start->raw();
        for (std::size_t q = 0; q < a.size(); ++q) min_inc = std::min(min_inc, a[q] - b[q]);
        out.diagnostics.min_increment = min_inc;
    }
    return out;
}

namespace {

ReflectResult solve_projection(const SwitchingProblem& problem, const Lattice& lattice,
                               const InnerSolverOptions& inner) {
    const std::size_t m = problem.m();
    const std::size_t n_steps = lattice.steps();
    const TimeGrid& grid = lattice.grid();
    const double dt = grid.dt();
    const double r = problem.discount;
    const DriverSpec& driver = problem.driver;

    ReflectResult res;
    SolutionField& sol = res.solution;
    sol.Y = NodeField(lattice, m);
    sol.Z = NodeField(lattice, m);
    sol.dK = NodeField(lattice, m);
    sol.binding.assign(lattice.total_nodes() * m, -1);
    const std::size_t max_passes = std::max<std::size_t>(1, m * m);
    std::vector<std::size_t> passes_used(lattice.total_nodes(), 0);

    for (std::size_t kk = n_steps; kk-- > 0;) {
        const double t = grid.time(kk);
        const double w = grid.weight(kk);
        detail::check_step_size(dt, driver.lipschitz(t), r, kk);
        const std::span<const double> next = sol.Y.step(kk + 1);
        parallel_for(lattice.nodes(kk), [&](std::size_t j) {
            std::vector<double> cont(m), candidate(m), scratch;
            std::span<double> y = sol.Y.at(kk, j);
            std::span<double> z = sol.Z.at(kk, j);
            for (std::size_t i = 0; i < m; ++i) {
                cont[i] = lattice.cond_expect_at(kk, j, next, m, i);
                z[i] = lattice.cond_increment_at(kk, j, next, m, i);
                y[i] = cont[i];
            }
            const NodePoint p{t, lattice.state(kk, j), kk, j};
            detail::implicit_step(
                cont,
                [&](std::span<const double> yv, std::span<double> f) {
                    for (std::size_t i = 0; i < m; ++i) f[i] = driver(i, p, yv, z[i]);
                },
                dt, r, y, inner.tol, inner.max_iters, scratch);
            std::copy(y.begin(), y.end(), candidate.begin());

            const std::size_t flat = lattice.offset(kk) + j;
            std::size_t pass = 0;
            bool changed = true;
            while (changed) {
                if (pass == max_passes) {
                    std::ostringstream os;
                    os << "projection did not reach a fixed point within " << max_passes
                       << " passes at step " << kk << " node " << j
                       << " (switching costs violate the triangle inequality?)";
                    throw ConvergenceError(os.str());
                }
                ++pass;
                changed = false;
                for (std::size_t i = 0; i < m; ++i) {
                    int arg = -1;
                    const double ob = obstacle_at(problem, y, i, p.x, &arg);
                    if (ob > y[i]) {
                        y[i] = ob;
                        sol.binding[flat * m + i] = arg;
                        changed = true;
                    }
                }
            }
            passes_used[flat] = pass;
            for (std::size_t i = 0; i < m; ++i) {
                sol.dK(i, kk, j) = w * (y[i] - candidate[i]);
            }
        });
    }
    res.projection_passes = *std::max_element(passes_used.begin(), passes_used.end());
    return res;
}

}  // namespace

ReflectResult solve_reflected(const SwitchingProblem& problem, const Lattice& lattice,
                              const ReflectOptions& options) {
    if (problem.driver.cross_mode_y) {
        throw InvalidArgument(
            "solve_reflected needs drivers that read only their own component of y; "
            "use fixed_point_solve for coupled drivers");
    }
    if (options.backend == Backend::Projection) {
        return solve_projection(problem, lattice, options.inner);
    }

    if (options.schedule.empty()) {
        throw InvalidArgument("penalization backend needs a nonempty penalty schedule");
    }
    for (std::size_t q = 1; q < options.schedule.size(); ++q) {
        if (!(options.schedule[q] > options.schedule[q - 1])) {
            throw InvalidArgument("penalty schedule must be strictly increasing");
        }
    }
    ReflectResult res;
    PenaltyDiagnostics trace;
    std::optional<PenalizedSolution> current;
    for (double n : options.schedule) {
        PenalizedSolution next = solve_penalized(problem, lattice, n, options.inner,
                                                 current ? &current->field.Y : nullptr);
        trace.levels.push_back(next.diagnostics);
        current = std::move(next);
    }
    res.solution.Y = std::move(current->field.Y);
    res.solution.Z = std::move(current->field.Z);
    res.solution.dK = std::move(current->dK);
    res.trace = std::move(trace);
    return res;
}

std::vector<double> skorokhod_residual(const SolutionField& solution,
                                       const SwitchingProblem& problem, const Lattice& lattice) {
    return skorokhod_impl(solution.Y, solution.dK, problem, lattice);
}

double obstacle_violation(const NodeField& Y, const SwitchingProblem& problem,
                          const Lattice& lattice) {
    double worst = 0.0;
    for (std::size_t k = 0; k <= lattice.steps(); ++k) {
        for (std::size_t j = 0; j < lattice.nodes(k); ++j) {
            const auto y = Y.at(k, j);
            const auto x = lattice.state(k, j);
            for (std::size_t i = 0; i < problem.m(); ++i) {
                worst = std::max(worst, obstacle_at(problem, y, i, x) - y[i]);
            }
        }
    }
    return worst;
}

KDiagnostics k_diagnostics(const SolutionField& solution, const Lattice& lattice) {
    const std::size_t m = solution.dK.modes();
    KDiagnostics d{std::numeric_limits<double>::infinity(), std::vector<double>(m, 0.0)};
    for (std::size_t k = 0; k < lattice.steps(); ++k) {
        const auto reach = lattice.reach(k);
        for (std::size_t j = 0; j < lattice.nodes(k); ++j) {
            for (std::size_t i = 0; i < m; ++i) {
                const double inc = solution.dK(i, k, j);
                d.min_increment = std::min(d.min_increment, inc);
                d.total_variation[i] += reach[j] * std::abs(inc);
            }
        }
    }
    if (lattice.steps() == 0 || m == 0) d.min_increment = 0.0;
    return d;
}

DecayCheck penalty_decay_check(std::span<const DecayPoint> trace, double band) {
    if (trace.size() < 3) {
        throw InvalidArgument("penalty decay check needs at least three levels");
    }
    DecayCheck out;
    for (std::size_t q = 1; q < trace.size(); ++q) {
        const double prev = trace[q - 1].violation;
        if (trace[q].violation > prev * (1.0 + 1e-9) + 1e-300) {
            out.passed = false;
            out.failing_level = q;
            std::ostringstream os;
            os << "violation increased from " << prev << " at n = " << trace[q - 1].n << " to "
               << trace[q].violation << " at n = " << trace[q].n;
            out.reason = os.str();
            break;
        }
    }
    std::vector<double> scaled;
    for (const auto& pt : trace) scaled.push_back(pt.n * pt.n * pt.violation);
    out.max_scaled = *std::max_element(scaled.begin(), scaled.end());
    std::vector<double> sorted = scaled;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    out.median_scaled = sorted.size() % 2 == 1 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    if (out.passed && out.max_scaled > band * out.median_scaled) {
        out.passed = false;
        const auto it = std::max_element(scaled.begin(), scaled.end());
        out.failing_level = static_cast<std::size_t>(it - scaled.begin());
        std::ostringstream os;
        os << "n^2 * violation = " << out.max_scaled << " exceeds " << band
           << " x median = " << band * out.median_scaled;
        out.reason = os.str();
    }
    return out;
}

DecayCheck penalty_decay_check(const PenaltyDiagnostics& trace, double band) {
    std::vector<DecayPoint> pts;
    for (const auto& lvl : trace.levels) pts.push_back({lvl.n, lvl.violation_total});
    return penalty_decay_check(pts, band);
}

}  // namespace rbsde

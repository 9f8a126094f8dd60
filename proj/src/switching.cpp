#include "rbsde/switching.hpp"

#include "rbsde/coupling.hpp"
#include "rbsde/detail/implicit_step.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace rbsde {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Strategy Strategy::open_loop(std::size_t modes, std::size_t start_step, std::size_t start_mode,
                             std::vector<SwitchRecord> switches, std::size_t steps) {
    if (start_mode >= modes) throw InvalidArgument("start mode out of range");
    if (start_step >= steps + 1) throw InvalidArgument("start step beyond the grid");
    std::size_t prev_mode = start_mode;
    for (std::size_t q = 0; q < switches.size(); ++q) {
        const SwitchRecord& s = switches[q];
        if (s.mode >= modes) throw InvalidArgument("switch target mode out of range");
        if (s.mode == prev_mode) {
            throw InvalidArgument("a switch must change the mode");
        }
        if (s.step >= steps) throw InvalidArgument("switch step must precede the terminal step");
        if (q == 0 ? s.step < start_step : s.step <= switches[q - 1].step) {
            throw InvalidArgument("switch steps must not precede the start and must increase strictly");
        }
        prev_mode = s.mode;
    }
    Strategy out;
    out.modes_ = modes;
    out.start_step_ = start_step;
    out.start_mode_ = start_mode;
    out.label_ = "open-loop";
    auto table = std::make_shared<const std::vector<SwitchRecord>>(switches);
    out.policy_ = [table](std::size_t step, std::size_t, std::size_t mode) -> int {
        for (const SwitchRecord& s : *table) {
            if (s.step == step) return s.mode == mode ? -1 : static_cast<int>(s.mode);
        }
        return -1;
    };
    out.open_loop_ = std::move(switches);
    return out;
}

Strategy Strategy::feedback(std::size_t modes, std::size_t start_step, std::size_t start_mode,
                            Policy policy, std::string label) {
    if (start_mode >= modes) throw InvalidArgument("start mode out of range");
    if (!policy) throw InvalidArgument("feedback strategy needs a policy");
    Strategy out;
    out.modes_ = modes;
    out.start_step_ = start_step;
    out.start_mode_ = start_mode;
    out.policy_ = std::move(policy);
    out.label_ = std::move(label);
    return out;
}

Strategy Strategy::random(std::size_t modes, std::size_t start_mode, std::uint64_t seed,
                          double switch_probability) {
    auto policy = [modes, seed, switch_probability](std::size_t step, std::size_t node,
                                                    std::size_t mode) -> int {
        if (modes < 2) return -1;
        std::uint64_t h = splitmix64(seed ^ splitmix64(step * 0x100000001b3ULL + node));
        h = splitmix64(h ^ mode);
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        if (u >= switch_probability) return -1;
        const std::size_t pick = splitmix64(h) % (modes - 1);
        return static_cast<int>(pick >= mode ? pick + 1 : pick);
    };
    std::ostringstream label;
    label << "random(seed=" << seed << ")";
    return feedback(modes, 0, start_mode, std::move(policy), label.str());
}

const std::vector<SwitchRecord>& Strategy::switches() const {
    if (!open_loop_) throw InvalidArgument("switch list only exists for open-loop strategies");
    return *open_loop_;
}

int Strategy::decision(std::size_t step, std::size_t node, std::size_t mode) const {
    if (step < start_step_) return -1;
    const int target = policy_(step, node, mode);
    if (target >= static_cast<int>(modes_)) throw InvalidArgument("policy returned a bad mode");
    return target == static_cast<int>(mode) ? -1 : target;
}

Strategy Strategy::with_start(std::size_t start_step, std::size_t start_mode) const {
    if (start_mode >= modes_) throw InvalidArgument("start mode out of range");
    Strategy out = *this;
    out.start_step_ = start_step;
    out.start_mode_ = start_mode;
    return out;
}

std::size_t state_process(const Strategy& strategy, std::size_t step) {
    if (step < strategy.start_step()) {
        throw InvalidArgument("state process queried before the strategy start");
    }
    std::size_t mode = strategy.start_mode();
    for (const SwitchRecord& s : strategy.switches()) {
        if (s.step <= step) mode = s.mode;
    }
    return mode;
}

namespace {

void check_path(const Lattice& lattice, std::span<const std::size_t> path) {
    if (path.size() != lattice.steps() + 1 || path[0] != 0) {
        throw InvalidArgument("a lattice path lists one node per step, starting at the root");
    }
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const auto br = lattice.branches(k, path[k]);
        if (std::none_of(br.begin(), br.end(),
                         [&](const Branch& b) { return b.child == path[k + 1] && b.prob > 0.0; })) {
            throw InvalidArgument("path uses a transition that does not exist");
        }
    }
}

}  // namespace

std::vector<std::size_t> state_along(const Strategy& strategy, const Lattice& lattice,
                                     std::span<const std::size_t> path) {
    check_path(lattice, path);
    std::vector<std::size_t> out(path.size(), strategy.start_mode());
    std::size_t mode = strategy.start_mode();
    for (std::size_t k = strategy.start_step(); k < path.size(); ++k) {
        if (k < lattice.steps()) {
            const int target = strategy.decision(k, path[k], mode);
            if (target >= 0) mode = static_cast<std::size_t>(target);
        }
        out[k] = mode;
    }
    return out;
}

std::vector<double> cost_process(const Strategy& strategy, const SwitchingProblem& problem,
                                 const Lattice& lattice, std::span<const std::size_t> path) {
    check_path(lattice, path);
    std::vector<double> A(path.size(), 0.0);
    std::size_t mode = strategy.start_mode();
    double acc = 0.0;
    for (std::size_t k = strategy.start_step(); k < path.size(); ++k) {
        if (k < lattice.steps()) {
            const int target = strategy.decision(k, path[k], mode);
            if (target >= 0) {
                const auto to = static_cast<std::size_t>(target);
                acc += lattice.grid().weight(k) * problem.costs(mode, to, lattice.state(k, path[k]));
                mode = to;
            }
        }
        A[k] = acc;
    }
    return A;
}

StrategyEvaluation eval_strategy(const Strategy& strategy, const SwitchingProblem& problem,
                                 const Lattice& lattice, const InnerSolverOptions& inner) {
    if (problem.driver.cross_mode_y) {
        throw InvalidArgument("eval_strategy needs drivers that do not read other modes");
    }
    if (strategy.modes() != problem.m()) {
        throw InvalidArgument("strategy and problem disagree on the number of modes");
    }
    const std::size_t m = problem.m();
    const std::size_t n_steps = lattice.steps();
    const TimeGrid& grid = lattice.grid();
    const double dt = grid.dt();
    const double r = problem.discount;
    const DriverSpec& driver = problem.driver;

    StrategyEvaluation ev{NodeField(lattice, m), NodeField(lattice, m), NodeField(lattice, m),
                          NodeField(lattice, m)};
    for (std::size_t kk = n_steps; kk-- > 0;) {
        const double t = grid.time(kk);
        const double w = grid.weight(kk);
        detail::check_step_size(dt, driver.lipschitz(t), r, kk);
        const auto next_u = ev.U.step(kk + 1);
        const auto next_c = ev.cost_to_go.step(kk + 1);
        const auto next_c2 = ev.cost_to_go_sq.step(kk + 1);
        parallel_for(lattice.nodes(kk), [&](std::size_t j) {
            std::vector<double> cont(m), z(m), cc(m), cc2(m), scratch;
            std::vector<double> post(m);
            for (std::size_t a = 0; a < m; ++a) {
                cont[a] = lattice.cond_expect_at(kk, j, next_u, m, a);
                z[a] = lattice.cond_increment_at(kk, j, next_u, m, a);
                cc[a] = lattice.cond_expect_at(kk, j, next_c, m, a);
                cc2[a] = lattice.cond_expect_at(kk, j, next_c2, m, a);
                post[a] = cont[a];
            }
            const NodePoint p{t, lattice.state(kk, j), kk, j};
            // Each mode's continuation only reads its own component.
            detail::implicit_step(
                cont,
                [&](std::span<const double> yv, std::span<double> f) {
                    for (std::size_t a = 0; a < m; ++a) f[a] = driver(a, p, yv, z[a]);
                },
                dt, r, std::span<double>(post), inner.tol, inner.max_iters, scratch);
            for (std::size_t a = 0; a < m; ++a) {
                const int target = strategy.decision(kk, j, a);
                const std::size_t run = target >= 0 ? static_cast<std::size_t>(target) : a;
                double u = post[run];
                double c = cc[run];
                double c2 = cc2[run];
                if (target >= 0) {
                    const double g = problem.costs(a, run, p.x);
                    u -= g;
                    const double jump = w * g;
                    c2 = jump * jump + 2.0 * jump * c + c2;
                    c += jump;
                }
                ev.U(a, kk, j) = u;
                ev.V(a, kk, j) = z[run];
                ev.cost_to_go(a, kk, j) = c;
                ev.cost_to_go_sq(a, kk, j) = c2;
            }
        });
    }
    const std::size_t s = std::min(strategy.start_step(), n_steps);
    if (lattice.nodes(s) != 1 && s != 0) {
        // Values at a non-root start step are node dependent; report the expectation.
        double u = 0.0, c = 0.0, c2 = 0.0;
        const auto reach = lattice.reach(s);
        for (std::size_t j = 0; j < lattice.nodes(s); ++j) {
            u += reach[j] * ev.U(strategy.start_mode(), s, j);
            c += reach[j] * ev.cost_to_go(strategy.start_mode(), s, j);
            c2 += reach[j] * ev.cost_to_go_sq(strategy.start_mode(), s, j);
        }
        ev.U0 = u;
        ev.total_cost_mean = c;
        ev.total_cost_second_moment = c2;
    } else {
        ev.U0 = ev.U(strategy.start_mode(), s, 0);
        ev.total_cost_mean = ev.cost_to_go(strategy.start_mode(), s, 0);
        ev.total_cost_second_moment = ev.cost_to_go_sq(strategy.start_mode(), s, 0);
    }
    return ev;
}

namespace {

struct DpOutput {
    NodeField value;
    std::vector<int> decision;  // per (flat node, mode): target or -1
    std::vector<double> gaps;
};

DpOutput run_dp(const SwitchingProblem& problem, const Lattice& lattice, std::size_t budget,
                const InnerSolverOptions& inner) {
    const std::size_t m = problem.m();
    const std::size_t n_steps = lattice.steps();
    const TimeGrid& grid = lattice.grid();
    const double dt = grid.dt();
    const double r = problem.discount;
    const DriverSpec& driver = problem.driver;
    const std::size_t layers = budget + 1;

    DpOutput out{NodeField(lattice, m), std::vector<int>(lattice.total_nodes() * m, -1),
                 std::vector<double>(layers, 0.0)};
    // V^b at the next step, layer-major: [b][node * m + mode].
    std::vector<std::vector<double>> next(layers,
                                          std::vector<double>(lattice.nodes(n_steps) * m, 0.0));
    for (std::size_t kk = n_steps; kk-- > 0;) {
        const double t = grid.time(kk);
        detail::check_step_size(dt, driver.lipschitz(t), r, kk);
        const std::size_t nodes = lattice.nodes(kk);
        std::vector<std::vector<double>> cur(layers, std::vector<double>(nodes * m));
        std::vector<double> node_gap(nodes * layers, 0.0);
        parallel_for(nodes, [&](std::size_t j) {
            std::vector<double> cont(m), z(m), scratch;
            std::vector<std::vector<double>> c(layers, std::vector<double>(m));
            const NodePoint p{t, lattice.state(kk, j), kk, j};
            for (std::size_t b = 0; b < layers; ++b) {
                for (std::size_t i = 0; i < m; ++i) {
                    cont[i] = lattice.cond_expect_at(kk, j, next[b], m, i);
                    z[i] = lattice.cond_increment_at(kk, j, next[b], m, i);
                    c[b][i] = cont[i];
                }
                detail::implicit_step(
                    cont,
                    [&](std::span<const double> yv, std::span<double> f) {
                        for (std::size_t i = 0; i < m; ++i) f[i] = driver(i, p, yv, z[i]);
                    },
                    dt, r, std::span<double>(c[b]), inner.tol, inner.max_iters, scratch);
            }
            for (std::size_t b = 0; b < layers; ++b) {
                for (std::size_t i = 0; i < m; ++i) {
                    // Candidates in index order, staying counts as index i; ties go
                    // to the lowest index.
                    double best = -std::numeric_limits<double>::infinity();
                    int arg = -1;
                    for (std::size_t l = 0; l < m; ++l) {
                        if (l != i && b == 0) continue;
                        const double v =
                            l == i ? c[b][i] : c[b - 1][l] - problem.costs(i, l, p.x);
                        if (v > best) {
                            best = v;
                            arg = l == i ? -1 : static_cast<int>(l);
                        }
                    }
                    cur[b][j * m + i] = best;
                    if (b == budget) {
                        out.value(i, kk, j) = best;
                        out.decision[(lattice.offset(kk) + j) * m + i] = arg;
                    }
                }
            }
            for (std::size_t b = 0; b < layers; ++b) {
                double g = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    g = std::max(g, std::abs(cur[b][j * m + i] - cur[budget][j * m + i]));
                }
                node_gap[j * layers + b] = g;
            }
        });
        for (std::size_t j = 0; j < nodes; ++j) {
            for (std::size_t b = 0; b < layers; ++b) {
                out.gaps[b] = std::max(out.gaps[b], node_gap[j * layers + b]);
            }
        }
        next = std::move(cur);
    }
    return out;
}

}  // namespace

OracleResult oracle_value(const SwitchingProblem& problem, const Lattice& lattice,
                          const OracleOptions& options) {
    const std::size_t m = problem.m();
    const std::size_t budget = m == 1 ? 0 : options.budget;
    OracleResult res{NodeField(lattice, m), {},
                     Strategy::feedback(m, 0, 0, [](auto, auto, auto) { return -1; }), 0, true,
                     false, 0, {}, 1};
    res.budget = budget;
    res.exact_regime = !problem.driver.cross_mode_y;

    DpOutput dp;
    if (res.exact_regime) {
        dp = run_dp(problem, lattice, budget, options.inner);
        res.passes = 1;
    } else {
        auto gamma = std::make_shared<NodeField>(lattice, m, 0.0);
        bool done = false;
        for (std::size_t pass = 1; pass <= options.max_passes; ++pass) {
            const SwitchingProblem frozen = freeze_problem(problem, gamma);
            dp = run_dp(frozen, lattice, budget, options.inner);
            NodeField diff = dp.value - *gamma;
            res.passes = pass;
            gamma = std::make_shared<NodeField>(dp.value);
            if (diff.max_abs() <= options.pass_tol) {
                done = true;
                break;
            }
        }
        if (!done) res.passes = options.max_passes + 1;
    }

    res.value = std::move(dp.value);
    res.budget_gaps = dp.gaps;
    res.value0.assign(res.value.at(0, 0).begin(), res.value.at(0, 0).end());
    if (budget == 0) {
        res.stabilized = true;
        res.sufficient_budget = 0;
    } else {
        res.stabilized = dp.gaps[budget - 1] <= options.stabilization_tol;
        res.sufficient_budget = budget;
        for (std::size_t b = 0; b <= budget; ++b) {
            if (dp.gaps[b] <= options.stabilization_tol) {
                res.sufficient_budget = b;
                break;
            }
        }
    }
    auto table = std::make_shared<const std::vector<int>>(std::move(dp.decision));
    std::vector<std::size_t> offsets(lattice.offsets().begin(), lattice.offsets().end());
    res.optimal = Strategy::feedback(
        m, 0, 0,
        [table, offsets = std::move(offsets), m](std::size_t step, std::size_t node,
                                                 std::size_t mode) {
            if (step + 1 >= offsets.size() - 1) return -1;
            return (*table)[(offsets[step] + node) * m + mode];
        },
        "optimal");
    return res;
}

std::vector<Strategy> sample_strategies(std::size_t modes, std::size_t count, std::uint64_t seed,
                                        double switch_probability) {
    std::mt19937_64 rng(seed);
    std::vector<Strategy> out;
    out.reserve(count);
    for (std::size_t q = 0; q < count; ++q) {
        const std::size_t start = modes > 1 ? static_cast<std::size_t>(rng() % modes) : 0;
        out.push_back(Strategy::random(modes, start, rng(), switch_probability));
    }
    return out;
}

RepresentationReport representation_check(const SwitchingProblem& problem,
                                          const Lattice& lattice, const NodeField& Y,
                                          std::span<const Strategy> strategies,
                                          const OracleOptions& oracle,
                                          const RepresentationTolerances& tol) {
    if (problem.driver.cross_mode_y) {
        throw InvalidArgument(
            "representation_check needs decoupled drivers; freeze the problem at the solution");
    }
    const std::size_t m = problem.m();
    RepresentationReport rep;
    const auto y0 = Y.at(0, 0);

    std::vector<StrategyEvaluation> evals(strategies.size());
    parallel_for(
        strategies.size(),
        [&](std::size_t q) { evals[q] = eval_strategy(strategies[q], problem, lattice, oracle.inner); },
        1);
    for (std::size_t q = 0; q < strategies.size(); ++q) {
        const Strategy& s = strategies[q];
        const double y = s.start_step() == 0 ? y0[s.start_mode()] : evals[q].U0;
        RepresentationReport::Domination d{s.label(), s.start_mode() + 1, evals[q].U0, y};
        rep.max_excess = std::max(rep.max_excess, d.U0 - d.Y0);
        if (d.U0 > d.Y0 + tol.domination) rep.violations.push_back(d);
        rep.sampled.push_back(std::move(d));
    }
    rep.dominated = rep.violations.empty();

    const OracleResult orc = oracle_value(problem, lattice, oracle);
    rep.oracle_stabilized = orc.stabilized;
    rep.sufficient_budget = orc.sufficient_budget;
    for (std::size_t i = 0; i < m; ++i) {
        rep.oracle_delta = std::max(rep.oracle_delta, std::abs(orc.value0[i] - y0[i]));
    }
    rep.attained = rep.oracle_delta <= tol.attainment;

    rep.optimal_delta.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const StrategyEvaluation ev =
            eval_strategy(orc.optimal.with_start(0, i), problem, lattice, oracle.inner);
        rep.optimal_delta[i] = std::abs(ev.U0 - y0[i]);
        if (rep.optimal_delta[i] > tol.attainment) rep.optimal_attains = false;
    }
    return rep;
}

}  // namespace rbsde

#include "rbsde/coupling.hpp"

#include "rbsde/errors.hpp"
#include "rbsde/parallel.hpp"
#include "rbsde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace rbsde {

std::string to_string(NormMethod method) {
    return method == NormMethod::PathEnumeration ? "path-enumeration" : "step-sum-proxy";
}

namespace {

double squared_weighted(const NodeField& Y, const Lattice& lattice, std::size_t k,
                        std::size_t j) {
    double s = 0.0;
    for (double v : Y.at(k, j)) s += v * v;
    return lattice.grid().weight(k) * s;
}

void enumerate(const NodeField& Y, const Lattice& lattice, std::size_t k, std::size_t j,
               double prob, double running, double& acc) {
    running = std::max(running, squared_weighted(Y, lattice, k, j));
    if (k == lattice.steps()) {
        acc += prob * running;
        return;
    }
    for (const Branch& b : lattice.branches(k, j)) {
        if (b.prob == 0.0) continue;
        enumerate(Y, lattice, k + 1, b.child, prob * b.prob, running, acc);
    }
}

}  // namespace

WeightedNorm weighted_norm(const NodeField& Y, const Lattice& lattice, std::size_t max_paths) {
    if (lattice.path_count() <= max_paths) {
        double acc = 0.0;
        enumerate(Y, lattice, 0, 0, 1.0, 0.0, acc);
        return {std::sqrt(acc), NormMethod::PathEnumeration};
    }
    double acc = 0.0;
    for (std::size_t k = 0; k <= lattice.steps(); ++k) {
        const auto reach = lattice.reach(k);
        for (std::size_t j = 0; j < lattice.nodes(k); ++j) {
            acc += reach[j] * squared_weighted(Y, lattice, k, j);
        }
    }
    return {std::sqrt(acc), NormMethod::StepSumProxy};
}

DriverSpec freeze_driver(const DriverSpec& driver, std::shared_ptr<const NodeField> gamma) {
    DriverSpec frozen = driver;
    const bool keep_own = driver.retain_own_y && driver.own_y;
    frozen.eval = [base = driver.eval, gamma = std::move(gamma), keep_own](
                      std::size_t mode, const NodePoint& p, std::span<const double> ybar,
                      double z) {
        const auto g = gamma->at(p.step, p.node);
        thread_local std::vector<double> y;
        y.assign(g.begin(), g.end());
        if (keep_own) y[mode] = ybar[mode];
        return base(mode, p, y, z);
    };
    frozen.cross_mode_y = false;
    frozen.own_y = keep_own;
    return frozen;
}

SwitchingProblem freeze_problem(const SwitchingProblem& problem,
                                std::shared_ptr<const NodeField> gamma) {
    SwitchingProblem frozen = problem;
    frozen.driver = freeze_driver(problem.driver, std::move(gamma));
    return frozen;
}

SolutionField apply_phi(const SwitchingProblem& problem, const Lattice& lattice,
                        const NodeField& gamma, const InnerSolverOptions& inner) {
    if (gamma.modes() != problem.m() || !gamma.same_shape(NodeField(lattice, problem.m()))) {
        throw InvalidArgument("gamma field does not match the problem and lattice");
    }
    if (!gamma.all_finite()) throw InvalidArgument("gamma field must be finite");
    const SwitchingProblem frozen =
        freeze_problem(problem, std::make_shared<const NodeField>(gamma));
    ReflectOptions opt;
    opt.backend = Backend::Projection;
    opt.inner = inner;
    return solve_reflected(frozen, lattice, opt).solution;
}

double estimate_rate(std::span<const double> errors) {
    const std::size_t n = std::min<std::size_t>(3, errors.size());
    if (n < 2) return 0.0;
    const auto tail = errors.subspan(errors.size() - n);
    if (std::any_of(tail.begin(), tail.end(), [](double e) { return !(e > 0.0); })) return 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        const double x = static_cast<double>(q);
        const double y = std::log(tail[q]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = static_cast<double>(n);
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    return std::exp(slope);
}

FixedPointResult fixed_point_solve(const SwitchingProblem& problem, const Lattice& lattice,
                                   const FixedPointOptions& options) {
    FixedPointResult res;
    CouplingState& st = res.state;
    st.gamma = NodeField(lattice, problem.m(), 0.0);

    for (std::size_t it = 1; it <= options.max_iters; ++it) {
        SolutionField next = apply_phi(problem, lattice, st.gamma, options.inner);
        const WeightedNorm e = weighted_norm(next.Y - st.gamma, lattice, options.max_paths);
        st.method = e.method;
        st.errors.push_back(e.value);
        st.rates.push_back(st.errors.size() >= 3 ? estimate_rate(st.errors) : 0.0);
        st.iterations = it;
        st.gamma = next.Y;
        res.solution = std::move(next);
        if (e.value < options.tol) {
            st.converged = true;
            break;
        }
    }
    st.rate = estimate_rate(st.errors);

    const DiscountBound bound = required_discount(problem);
    if (st.rate >= 1.0 && !(bound.meets_penalization && bound.meets_contraction)) {
        std::ostringstream os;
        os << "estimated contraction rate " << st.rate << " >= 1 with r = " << problem.discount
           << " below the advisory bounds (" << bound.penalization << ", " << bound.contraction
           << ")";
        st.warnings.push_back(os.str());
    }
    if (!st.converged) {
        const auto& e = st.errors;
        const bool decreasing = e.size() >= 2 && e.back() < e[e.size() - 2];
        if (!decreasing) {
            std::ostringstream os;
            os << "fixed point did not converge in " << options.max_iters
               << " iterations; error trace:";
            for (double v : e) os << ' ' << v;
            throw ConvergenceError(os.str());
        }
        st.warnings.push_back("fixed point stopped at max iterations with errors still decreasing");
    }
    return res;
}

ProbeResult contraction_probe(const SwitchingProblem& problem, const Lattice& lattice,
                              std::span<const std::pair<NodeField, NodeField>> pairs,
                              const InnerSolverOptions& inner, std::size_t max_paths) {
    ProbeResult out;
    std::vector<double> ratio(pairs.size(), -1.0);
    std::vector<NormMethod> method(pairs.size(), NormMethod::PathEnumeration);
    parallel_for(
        pairs.size(),
        [&](std::size_t q) {
            const auto& [a, b] = pairs[q];
            const WeightedNorm den = weighted_norm(a - b, lattice, max_paths);
            method[q] = den.method;
            if (!(den.value > 0.0)) return;
            const SolutionField ya = apply_phi(problem, lattice, a, inner);
            const SolutionField yb = apply_phi(problem, lattice, b, inner);
            ratio[q] = weighted_norm(ya.Y - yb.Y, lattice, max_paths).value / den.value;
        },
        1);
    for (std::size_t q = 0; q < pairs.size(); ++q) {
        out.method = method[q];
        if (ratio[q] < 0.0) {
            ++out.skipped;
            continue;
        }
        out.ratios.push_back(ratio[q]);
        out.max_ratio = std::max(out.max_ratio, ratio[q]);
    }
    return out;
}

ProbeResult contraction_probe(const SwitchingProblem& problem, const Lattice& lattice,
                              std::size_t pairs, std::uint64_t seed, double amplitude,
                              const InnerSolverOptions& inner, std::size_t max_paths) {
    if (!(amplitude > 0.0)) {
        amplitude = std::max(1.0, problem.driver.zero_bound / problem.discount);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-amplitude, amplitude);
    std::vector<std::pair<NodeField, NodeField>> samples;
    samples.reserve(pairs);
    for (std::size_t q = 0; q < pairs; ++q) {
        NodeField a(lattice, problem.m());
        NodeField b(lattice, problem.m());
        for (double& v : a.raw()) v = unif(rng);
        for (double& v : b.raw()) v = unif(rng);
        samples.emplace_back(std::move(a), std::move(b));
    }
    return contraction_probe(problem, lattice, samples, inner, max_paths);
}

}  // namespace rbsde

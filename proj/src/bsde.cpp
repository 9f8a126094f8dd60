#include "rbsde/bsde.hpp"

#include "rbsde/detail/implicit_step.hpp"
#include "rbsde/parallel.hpp"

#include <cmath>
#include <vector>

namespace rbsde {

BsdeField solve_bsde(const SwitchingProblem& problem, const Lattice& lattice,
                     const DriverSpec& driver, std::span<const double> terminal,
                     const InnerSolverOptions& inner) {
    const std::size_t m = problem.m();
    const std::size_t n_steps = lattice.steps();
    const TimeGrid& grid = lattice.grid();
    const double dt = grid.dt();
    const double r = problem.discount;

    BsdeField out{NodeField(lattice, m), NodeField(lattice, m)};
    if (!terminal.empty()) {
        if (terminal.size() != lattice.nodes(n_steps) * m) {
            throw InvalidArgument("terminal field has the wrong size");
        }
        for (double v : terminal) {
            if (!std::isfinite(v)) throw InvalidArgument("terminal field must be finite");
        }
        std::copy(terminal.begin(), terminal.end(), out.Y.step(n_steps).begin());
    }

    for (std::size_t kk = n_steps; kk-- > 0;) {
        const double t = grid.time(kk);
        detail::check_step_size(dt, driver.lipschitz(t), r, kk);
        const std::span<const double> next = out.Y.step(kk + 1);
        parallel_for(lattice.nodes(kk), [&](std::size_t j) {
            std::vector<double> cont(m), scratch;
            std::span<double> y = out.Y.at(kk, j);
            std::span<double> z = out.Z.at(kk, j);
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
        });
    }
    return out;
}

NodeField undiscount(const NodeField& discounted, const Lattice& lattice) {
    NodeField out = discounted;
    for (std::size_t k = 0; k <= lattice.steps(); ++k) {
        const double w = 1.0 / lattice.grid().weight(k);
        for (double& v : out.step(k)) v *= w;
    }
    return out;
}

NodeField discount(const NodeField& values, const Lattice& lattice) {
    NodeField out = values;
    for (std::size_t k = 0; k <= lattice.steps(); ++k) {
        const double w = lattice.grid().weight(k);
        for (double& v : out.step(k)) v *= w;
    }
    return out;
}

}  // namespace rbsde

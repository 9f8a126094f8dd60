// Property tests against independent oracles: path enumeration, an RK4 integration of
// the penalized ODE, and brute-force enumeration of open-loop strategies.
#include "catch_amalgamated.hpp"

#include "rbsde/bsde.hpp"
#include "rbsde/reflect.hpp"
#include "rbsde/switching.hpp"
#include "support.hpp"

#include <array>
#include <cmath>
#include <random>

using namespace rbsde;
using Catch::Approx;

namespace {

// Backward RK4 for y' = r y - f - n * penalty(y), y(T) = 0, two modes with constant data.
std::array<double, 2> penalized_ode(double n, double T, double r, std::array<double, 2> f, double g,
                                    std::size_t steps) {
    auto rhs = [&](const std::array<double, 2>& y) {
        std::array<double, 2> d{};
        for (int i = 0; i < 2; ++i) {
            const double arg = y[i] - y[1 - i] + g;
            const double pen = arg < 0.0 ? -arg : 0.0;
            d[i] = r * y[i] - f[i] - n * pen;
        }
        return d;
    };
    std::array<double, 2> y{0.0, 0.0};
    const double h = -T / static_cast<double>(steps);
    auto axpy = [](std::array<double, 2> a, const std::array<double, 2>& b, double s) {
        a[0] += s * b[0];
        a[1] += s * b[1];
        return a;
    };
    for (std::size_t k = 0; k < steps; ++k) {
        const auto k1 = rhs(y);
        const auto k2 = rhs(axpy(y, k1, h / 2));
        const auto k3 = rhs(axpy(y, k2, h / 2));
        const auto k4 = rhs(axpy(y, k3, h));
        for (int i = 0; i < 2; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return y;
}

}  // namespace

TEST_CASE("tower property by path enumeration", "[properties]") {
    for (StateKind kind : {StateKind::Binomial, StateKind::Trinomial}) {
        for (std::size_t N : {1u, 3u, 6u}) {
            const Lattice lat = testing::tree(kind, 1.0, N, 1.0);
            std::mt19937_64 rng(N);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            std::vector<double> field(lat.nodes(N));
            for (double& v : field) v = u(rng);
            std::vector<double> back = field;
            for (std::size_t k = N; k-- > 0;) back = lat.cond_expect(k, back);
            double direct = 0.0;
            testing::for_each_path(lat, [&](std::span<const std::size_t> path, double prob) {
                direct += prob * field[path.back()];
            });
            CHECK(back[0] == Approx(direct).epsilon(1e-13));
        }
    }
}

TEST_CASE("cond_expect is monotone", "[properties]") {
    const Lattice lat = testing::tree(StateKind::Trinomial, 1.0, 5, 1.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(lat.nodes(5)), b(lat.nodes(5));
        for (std::size_t j = 0; j < a.size(); ++j) {
            a[j] = u(rng);
            b[j] = a[j] + std::abs(u(rng));
        }
        const auto ea = lat.cond_expect(4, a);
        const auto eb = lat.cond_expect(4, b);
        for (std::size_t j = 0; j < ea.size(); ++j) CHECK(ea[j] <= eb[j]);
    }
}

TEST_CASE("K is nondecreasing along every path", "[properties]") {
    SwitchingProblem p = testing::constant_problem({0.0, 0.0}, 0.2, 1.0);
    p.driver.eval = [](std::size_t i, const NodePoint& pt, std::span<const double>, double) {
        return i == 0 ? 1.0 + pt.x[0] : 1.0 - pt.x[0];
    };
    p.driver.zero_bound = 3.0;
    const Lattice lat = testing::tree(StateKind::Binomial, 0.3, 12, 1.0);
    for (Backend b : {Backend::Projection, Backend::Penalization}) {
        ReflectOptions o;
        o.backend = b;
        o.schedule = doubling_schedule(8);
        const SolutionField s = solve_reflected(p, lat, o).solution;
        testing::for_each_path(lat, [&](std::span<const std::size_t> path, double) {
            for (std::size_t i = 0; i < 2; ++i) {
                const auto K = s.K_along(path, i);
                CHECK(K.front() == 0.0);
                for (std::size_t k = 0; k + 1 < K.size(); ++k) REQUIRE(K[k + 1] >= K[k] - 1e-12);
            }
        });
    }
}

TEST_CASE("penalized lattice solve matches an RK4 oracle", "[properties]") {
    const SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 0.5, 1.0);
    const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.0035));
    for (double n : {4.0, 16.0, 64.0}) {
        const PenalizedSolution s = solve_penalized(p, lat, n);
        const auto ode = penalized_ode(n, lat.grid().horizon(), 1.0, {2.0, 1.0}, 0.5, 200000);
        INFO("n = " << n);
        CHECK(s.field.Y(0, 0, 0) == Approx(ode[0]).margin(5e-2));
        CHECK(s.field.Y(1, 0, 0) == Approx(ode[1]).margin(5e-2));
    }
    const auto ode64 = penalized_ode(64.0, lat.grid().horizon(), 1.0, {2.0, 1.0}, 0.5, 200000);
    CHECK(ode64[0] == Approx(2.0).margin(5e-2));
    CHECK(ode64[1] == Approx(1.5).margin(5e-2));
}

TEST_CASE("projection matches brute-force strategy enumeration", "[properties]") {
    // Deterministic data: the oracle is the best open-loop schedule with at most two
    // switches, enumerated over a coarse grid.
    SwitchingProblem p = testing::constant_problem({0.0, 0.0}, 0.3, 1.0);
    p.driver.eval = [](std::size_t i, const NodePoint& pt, std::span<const double>, double) {
        return i == 0 ? 2.0 - pt.t : 0.5 + 0.5 * pt.t;
    };
    p.driver.zero_bound = 3.0;
    const std::size_t N = 60;
    const Lattice lat = testing::path_lattice(3.0, N, 1.0);
    const ReflectResult proj = solve_reflected(p, lat);
    for (std::size_t start = 0; start < 2; ++start) {
        double best = eval_strategy(Strategy::open_loop(2, 0, start, {}, N), p, lat).U0;
        for (std::size_t a = 0; a < N; ++a) {
            const std::size_t m1 = 1 - start;
            best = std::max(best, eval_strategy(Strategy::open_loop(2, 0, start, {{a, m1}}, N), p, lat).U0);
            for (std::size_t b = a + 1; b < N; ++b) {
                best = std::max(best, eval_strategy(Strategy::open_loop(2, 0, start, {{a, m1}, {b, start}}, N), p, lat).U0);
            }
        }
        INFO("start mode " << start + 1);
        CHECK(proj.solution.Y(start, 0, 0) == Approx(best).margin(1e-12));
    }
}

TEST_CASE("exclusivity holds on random two- and three-mode problems", "[properties]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (std::size_t m : {2u, 3u}) {
        std::vector<double> a(m), b(m);
        for (std::size_t i = 0; i < m; ++i) {
            a[i] = u(rng);
            b[i] = u(rng) - 1.0;
        }
        SwitchingProblem p = testing::constant_problem(std::vector<double>(m, 0.0), 0.3, 1.0);
        p.driver.eval = [a, b](std::size_t i, const NodePoint& pt, std::span<const double>, double) {
            return a[i] + b[i] * std::tanh(pt.x[0]);
        };
        p.driver.zero_bound = 3.0;
        const Lattice lat = testing::tree(StateKind::Binomial, 2.0, 200, 1.0);
        ReflectOptions o;
        o.backend = Backend::Penalization;
        o.schedule = doubling_schedule(8);
        const ReflectResult r = solve_reflected(p, lat, o);
        for (const auto& lvl : r.trace->levels) CHECK(lvl.exclusivity == 0.0);
        for (std::size_t q = 1; q < r.trace->levels.size(); ++q) CHECK(r.trace->levels[q].min_increment >= -1e-10);
    }
}

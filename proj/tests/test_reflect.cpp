#include "catch_amalgamated.hpp"

#include "rbsde/bsde.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/reflect.hpp"
#include "support.hpp"

#include <cmath>

using namespace rbsde;
using Catch::Approx;

namespace {

ReflectOptions penalization(std::vector<double> schedule) {
    ReflectOptions o;
    o.backend = Backend::Penalization;
    o.schedule = std::move(schedule);
    return o;
}

}  // namespace

TEST_CASE("doubling schedule", "[reflect]") {
    CHECK(doubling_schedule(64) == std::vector<double>{1, 2, 4, 8, 16, 32, 64});
    CHECK(doubling_schedule(1) == std::vector<double>{1});
    CHECK(backend_from_string(to_string(Backend::Penalization)) == Backend::Penalization);
    CHECK_THROWS_AS(backend_from_string("simplex"), InvalidArgument);
}

TEST_CASE("single mode reduces to the plain BSDE", "[reflect]") {
    const SwitchingProblem p = testing::constant_problem({1.0}, 0.0, 0.5);
    const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.01));
    const BsdeField plain = solve_bsde(p, lat, p.driver);

    const PenalizedSolution pen = solve_penalized(p, lat, 16.0);
    CHECK((pen.field.Y - plain.Y).max_abs() == 0.0);

    const ReflectResult proj = solve_reflected(p, lat);
    CHECK((proj.solution.Y - plain.Y).max_abs() == 0.0);
    CHECK(proj.solution.dK.max_abs() == 0.0);
    CHECK(skorokhod_residual(proj.solution, p, lat) == std::vector<double>{0.0});
}

TEST_CASE("penalized two-mode constants", "[reflect]") {
    const SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 0.5, 1.0);
    const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.0035));
    SECTION("n = 0 decouples") {
        const PenalizedSolution s = solve_penalized(p, lat, 0.0);
        CHECK(s.field.Y(0, 0, 0) == Approx(2.0).margin(1e-2));
        CHECK(s.field.Y(1, 0, 0) == Approx(1.0).margin(1e-2));
        CHECK(s.dK.max_abs() == 0.0);
    }
    SECTION("n = 64") {
        const PenalizedSolution s = solve_penalized(p, lat, 64.0);
        CHECK(s.field.Y(0, 0, 0) == Approx(2.0).margin(5e-2));
        CHECK(s.field.Y(1, 0, 0) == Approx(1.5).margin(5e-2));
        // Stationary balance r y2 = 1 + n (y1 - 0.5 - y2).
        CHECK(s.field.Y(1, 0, 0) == Approx((1.0 + 64.0 * (s.field.Y(0, 0, 0) - 0.5)) / 65.0).margin(1e-3));
        CHECK(s.diagnostics.exclusivity == 0.0);
        CHECK(s.diagnostics.sup_violation > 0.0);
    }
    SECTION("rejects a negative level") {
        CHECK_THROWS_AS(solve_penalized(p, lat, -1.0), InvalidArgument);
    }
}

TEST_CASE("projection two-mode constants", "[reflect]") {
    const SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 0.5, 1.0);
    const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.0035));
    const ReflectResult res = solve_reflected(p, lat);
    const SolutionField& s = res.solution;
    CHECK(s.Y(0, 0, 0) == Approx(2.0).margin(1e-2));
    CHECK(s.Y(1, 0, 0) == Approx(1.5).margin(1e-2));
    CHECK(obstacle_violation(s.Y, p, lat) <= 1e-12);

    const std::vector<std::size_t> path(lat.steps() + 1, 0);
    const std::vector<double> K2 = s.K_along(path, 1);
    const std::vector<double> K1 = s.K_along(path, 0);
    CHECK(K2.front() == 0.0);
    CHECK(K1.back() == Approx(0.0).margin(1e-12));
    const std::size_t half = lat.steps() / 2;
    for (std::size_t k = 0; k < half; ++k) CHECK(K2[k + 1] > K2[k]);
    for (std::size_t k = 0; k < lat.steps(); ++k) CHECK(K2[k + 1] >= K2[k]);

    for (double v : skorokhod_residual(s, p, lat)) CHECK(std::abs(v) <= 1e-10);
    const KDiagnostics kd = k_diagnostics(s, lat);
    CHECK(kd.min_increment >= -1e-12);
    CHECK(kd.total_variation[0] == Approx(0.0).margin(1e-12));
    CHECK(kd.total_variation[1] > 0.0);
    // Binding constraint for mode 2 is mode 1.
    CHECK(s.binding[1] == 0);
}

TEST_CASE("projection three-mode constants", "[reflect]") {
    const SwitchingProblem p = testing::constant_problem({3.0, 2.0, 1.0}, 0.8, 1.0);
    const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.01));
    const ReflectResult res = solve_reflected(p, lat);
    const auto y = res.solution.Y.at(0, 0);
    CHECK(y[0] == Approx(3.0).margin(1e-2));
    CHECK(y[1] == Approx(2.2).margin(1e-2));
    CHECK(y[2] == Approx(std::max(1.0, y[0] - 0.8)).margin(1e-12));
    // Mode 3 is pushed by mode 1 directly, not through mode 2.
    CHECK(res.solution.binding[2] == 0);
}

TEST_CASE("penalization schedule diagnostics", "[reflect]") {
    const SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 0.5, 1.0);
    const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.0035));
    const ReflectResult res = solve_reflected(p, lat, penalization(doubling_schedule(64)));
    REQUIRE(res.trace);
    const auto& levels = res.trace->levels;
    REQUIRE(levels.size() == 7);
    for (std::size_t q = 1; q < levels.size(); ++q) {
        CHECK(levels[q].min_increment >= -1e-10);  // Y^n <= Y^{2n}
        CHECK(levels[q].sup_violation <= levels[q - 1].sup_violation);
        CHECK(std::abs(levels[q].skorokhod[1]) <= std::abs(levels[q - 1].skorokhod[1]));
    }
    for (const auto& lvl : levels) CHECK(lvl.exclusivity == 0.0);
    CHECK(std::abs(levels.back().skorokhod[1]) <= 1e-2);
    CHECK(levels.back().sup_violation <= 5e-2);
    const DecayCheck dc = penalty_decay_check(*res.trace);
    CHECK(dc.passed);
    CHECK(dc.max_scaled <= 4.0 * dc.median_scaled);

    const ReflectResult proj = solve_reflected(p, lat);
    const double gap = std::max(std::abs(proj.solution.Y(0, 0, 0) - res.solution.Y(0, 0, 0)),
                                std::abs(proj.solution.Y(1, 0, 0) - res.solution.Y(1, 0, 0)));
    CHECK(gap <= std::max(1e-2, 10.0 / 64.0));

    CHECK_THROWS_AS(solve_reflected(p, lat, penalization({4, 2})), InvalidArgument);
    CHECK_THROWS_AS(solve_reflected(p, lat, penalization({})), InvalidArgument);
}

TEST_CASE("penalty_decay_check", "[reflect]") {
    SECTION("all-zero trace passes") {
        const SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 10.0, 1.0);
        const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.0035));
        const ReflectResult res = solve_reflected(p, lat, penalization(doubling_schedule(64)));
        for (const auto& lvl : res.trace->levels) CHECK(lvl.violation_total == 0.0);
        CHECK(penalty_decay_check(*res.trace).passed);
    }
    SECTION("first increase is reported") {
        const std::vector<DecayPoint> trace{{1, 1.0}, {2, 0.25}, {4, 0.3}, {8, 0.001}};
        const DecayCheck dc = penalty_decay_check(trace);
        CHECK_FALSE(dc.passed);
        REQUIRE(dc.failing_level);
        CHECK(*dc.failing_level == 2);
        CHECK(dc.reason.find("increased") != std::string::npos);
    }
    SECTION("band violation") {
        const std::vector<DecayPoint> trace{{1, 1.0}, {2, 0.25}, {4, 0.0625}, {16, 0.05}};
        const DecayCheck dc = penalty_decay_check(trace);
        CHECK_FALSE(dc.passed);
        CHECK(*dc.failing_level == 3);
    }
    SECTION("exact 1/n^2 passes") {
        const std::vector<DecayPoint> trace{{1, 1.0}, {2, 0.25}, {4, 0.0625}};
        CHECK(penalty_decay_check(trace).passed);
    }
    SECTION("too short") {
        const std::vector<DecayPoint> trace{{1, 1.0}, {2, 0.25}};
        CHECK_THROWS_AS(penalty_decay_check(trace), InvalidArgument);
    }
}

TEST_CASE("coupled drivers are rejected by solve_reflected", "[reflect]") {
    SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 0.5, 1.0);
    p.driver.cross_mode_y = true;
    const Lattice lat = testing::path_lattice(1.0, 10, 1.0);
    CHECK_THROWS_AS(solve_reflected(p, lat), InvalidArgument);
}

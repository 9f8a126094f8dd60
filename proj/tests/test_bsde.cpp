#include "catch_amalgamated.hpp"

#include "rbsde/bsde.hpp"
#include "rbsde/errors.hpp"
#include "support.hpp"

#include <cmath>

using namespace rbsde;
using Catch::Approx;

namespace {

DriverSpec driver_of(std::function<double(const NodePoint&, double y, double z)> f,
                     bool own_y = false) {
    DriverSpec d;
    d.eval = [f](std::size_t, const NodePoint& p, std::span<const double> y, double z) {
        return f(p, y[0], z);
    };
    d.own_y = own_y;
    d.z_dependent = true;
    if (own_y) d.lipschitz = LipschitzModulus::exponential(1.0, 0.0);
    return d;
}

double y0_for(double dt) {
    // f = cos t on [0, 4] with r = 1: smooth, no closed form needed for the ratio.
    SwitchingProblem p = testing::constant_problem({0.0}, 0.0, 1.0);
    const auto n = static_cast<std::size_t>(std::llround(4.0 / dt));
    const Lattice lat = testing::path_lattice(4.0, n, 1.0);
    const DriverSpec d = driver_of([](const NodePoint& pt, double, double) { return std::cos(pt.t); });
    return solve_bsde(p, lat, d).Y(0, 0, 0);
}

}  // namespace

TEST_CASE("solve_bsde closed forms", "[bsde]") {
    SECTION("f = 1, r = 0.5") {
        const SwitchingProblem p = testing::constant_problem({1.0}, 0.0, 0.5);
        const Lattice lat = build_lattice(StateModelSpec{}, testing::grid_for(p, 0.01));
        const BsdeField sol = solve_bsde(p, lat, p.driver);
        CHECK(sol.Y(0, 0, 0) == Approx(2.0).margin(1e-2));
        CHECK(sol.Z.max_abs() == 0.0);
        CHECK(sol.Y(0, lat.steps(), 0) == 0.0);
    }
    SECTION("f = 1 - y, r = 1") {
        SwitchingProblem p = testing::constant_problem({1.0}, 0.0, 1.0);
        const DriverSpec d =
            driver_of([](const NodePoint&, double y, double) { return 1.0 - y; }, true);
        const Lattice lat = testing::path_lattice(12.0, 1200, 1.0);
        CHECK(solve_bsde(p, lat, d).Y(0, 0, 0) == Approx(0.5).margin(1e-2));
    }
    SECTION("zero driver and terminal") {
        const SwitchingProblem p = testing::constant_problem({0.0}, 0.0, 1.0);
        const Lattice lat = testing::tree(StateKind::Binomial, 1.0, 20, 1.0);
        const BsdeField sol = solve_bsde(p, lat, p.driver);
        CHECK(sol.Y.max_abs() == 0.0);
        CHECK(sol.Z.max_abs() == 0.0);
    }
}

TEST_CASE("solve_bsde terminal data and Z", "[bsde]") {
    // Y_T = B_T with f = 0 and r small: Z recovers the unit sensitivity.
    const SwitchingProblem p = testing::constant_problem({0.0}, 0.0, 1e-9);
    const Lattice lat = testing::tree(StateKind::Binomial, 1.0, 16, 1e-9);
    std::vector<double> terminal(lat.nodes(16));
    for (std::size_t j = 0; j < terminal.size(); ++j) terminal[j] = lat.state(16, j)[0];
    const BsdeField sol = solve_bsde(p, lat, p.driver, terminal);
    CHECK(sol.Y(0, 0, 0) == Approx(0.0).margin(1e-12));
    for (std::size_t j = 0; j < lat.nodes(5); ++j) CHECK(sol.Z(0, 5, j) == Approx(1.0).epsilon(1e-8));

    CHECK_THROWS_AS(solve_bsde(p, lat, p.driver, std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("solve_bsde comparison", "[bsde]") {
    const SwitchingProblem p = testing::constant_problem({0.0}, 0.0, 1.0);
    const Lattice lat = testing::tree(StateKind::Binomial, 2.0, 40, 1.0);
    const DriverSpec lo = driver_of(
        [](const NodePoint& pt, double y, double z) { return std::sin(pt.x[0]) - 0.5 * y + 0.3 * z; },
        true);
    const DriverSpec hi = driver_of(
        [](const NodePoint& pt, double y, double z) {
            return std::sin(pt.x[0]) + 0.2 + 0.1 * pt.t - 0.5 * y + 0.3 * z;
        },
        true);
    const BsdeField a = solve_bsde(p, lat, lo);
    const BsdeField b = solve_bsde(p, lat, hi);
    const auto ya = a.Y.raw();
    const auto yb = b.Y.raw();
    for (std::size_t q = 0; q < ya.size(); ++q) CHECK(ya[q] <= yb[q] + 1e-14);
}

TEST_CASE("solve_bsde is linear in y-independent drivers", "[bsde]") {
    const SwitchingProblem p = testing::constant_problem({0.0}, 0.0, 1.0);
    const Lattice lat = testing::tree(StateKind::Trinomial, 2.0, 30, 1.0);
    auto f1 = [](const NodePoint& pt, double, double) { return pt.x[0]; };
    auto f2 = [](const NodePoint& pt, double, double) { return pt.t * pt.t - 1.0; };
    const BsdeField a = solve_bsde(p, lat, driver_of(f1));
    const BsdeField b = solve_bsde(p, lat, driver_of(f2));
    const BsdeField s = solve_bsde(
        p, lat, driver_of([&](const NodePoint& pt, double y, double z) { return f1(pt, y, z) + f2(pt, y, z); }));
    NodeField sum = a.Y;
    sum += b.Y;
    CHECK((s.Y - sum).max_abs() < 1e-10);
}

TEST_CASE("solve_bsde first-order refinement", "[bsde]") {
    const double y1 = y0_for(0.02);
    const double y2 = y0_for(0.01);
    const double y3 = y0_for(0.005);
    const double ratio = (y1 - y2) / (y2 - y3);
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 3.0);
}

TEST_CASE("discount and undiscount are inverse", "[bsde]") {
    const SwitchingProblem p = testing::constant_problem({1.0, 2.0}, 0.5, 1.0);
    const Lattice lat = testing::tree(StateKind::Binomial, 1.0, 10, 0.8);
    const BsdeField sol = solve_bsde(p, lat, p.driver);
    const NodeField back = undiscount(discount(sol.Y, lat), lat);
    CHECK((back - sol.Y).max_abs() < 1e-10);
    const NodeField d = discount(sol.Y, lat);
    CHECK(d(1, 4, 2) == Approx(std::exp(-0.8 * lat.grid().time(4)) * sol.Y(1, 4, 2)));
}

TEST_CASE("solve_bsde rejects too coarse steps", "[bsde]") {
    const SwitchingProblem p = testing::constant_problem({1.0}, 0.0, 1.0);
    DriverSpec stiff = p.driver;
    stiff.lipschitz = LipschitzModulus::exponential(100.0, 0.0);
    const Lattice lat = testing::path_lattice(2.0, 4, 1.0);
    CHECK_THROWS_AS(solve_bsde(p, lat, stiff), StepSizeError);
}

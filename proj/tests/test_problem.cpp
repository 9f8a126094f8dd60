#include "catch_amalgamated.hpp"

#include "rbsde/errors.hpp"
#include "rbsde/problem.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>

using namespace rbsde;
using Catch::Approx;

namespace {

// f_i = c_i + 0.1 e^{-t} ybar^{other}: Lipschitz in y with u(t) = 0.1 e^{-t}.
SwitchingProblem coupled_two_mode() {
    SwitchingProblem p = testing::constant_problem({3.0, 1.0}, 0.5, 2.0);
    p.driver.eval = [](std::size_t i, const NodePoint& pt, std::span<const double> y, double) {
        return (i == 0 ? 3.0 : 1.0) + 0.1 * std::exp(-pt.t) * y[1 - i];
    };
    p.driver.lipschitz = LipschitzModulus::exponential(0.1, 1.0);
    p.driver.cross_mode_y = true;
    return p;
}

}  // namespace

TEST_CASE("LipschitzModulus integrals", "[problem]") {
    const auto e = LipschitzModulus::exponential(0.5, 2.0);
    CHECK(e(0.0) == Approx(0.5));
    CHECK(e(1.0) == Approx(0.5 * std::exp(-2.0)));
    CHECK(e.integral() == Approx(0.25));
    CHECK(e.square_integral() == Approx(0.0625));

    const auto w = LipschitzModulus::window(1.0, 2.0);
    CHECK(w(1.5) == 1.0);
    CHECK(w(2.5) == 0.0);
    CHECK(w.integral() == Approx(2.0));
    CHECK(w.square_integral() == Approx(2.0));

    const auto c = LipschitzModulus::window(0.1, std::numeric_limits<double>::infinity());
    CHECK(std::isinf(c.integral()));
    CHECK(std::isinf(c.square_integral()));

    CHECK(LipschitzModulus::zero().integral() == 0.0);
}

TEST_CASE("validate_assumptions accepts a well-posed problem", "[problem]") {
    SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 0.5, 1.0);
    p.driver.lipschitz = LipschitzModulus::exponential(0.1, 1.0);
    const ValidationReport r = validate_assumptions(p, {});
    CHECK(r.passed());
    CHECK_FALSE(r.has_warnings());
    REQUIRE(r.find("H2.triangle") != nullptr);
    CHECK(r.find("H2.triangle")->status == Severity::Pass);
}

TEST_CASE("validate_assumptions rejects a triangle violation with a witness", "[problem]") {
    SwitchingProblem p = testing::constant_problem({1.0, 1.0, 1.0}, 1.0, 1.0);
    testing::set_cost_table(p, {{0.0, 0.5, 2.0}, {0.5, 0.0, 0.5}, {2.0, 0.5, 0.0}});
    const ValidationReport r = validate_assumptions(p, {});
    CHECK_FALSE(r.passed());
    const AssumptionCheck* tri = r.find("H2.triangle");
    REQUIRE(tri != nullptr);
    CHECK(tri->status == Severity::Failure);
    CHECK(tri->witness_modes == std::vector<std::size_t>{1, 2, 3});
    CHECK(tri->message.find("g_13") != std::string::npos);
}

TEST_CASE("validate_assumptions rejects a constant modulus", "[problem]") {
    SwitchingProblem p = testing::constant_problem({1.0, 2.0}, 0.5, 1.0);
    p.driver.lipschitz =
        LipschitzModulus::window(0.1, std::numeric_limits<double>::infinity());
    const ValidationReport r = validate_assumptions(p, {});
    CHECK_FALSE(r.passed());
    const AssumptionCheck* c = r.find("H1.lipschitz_integrability");
    REQUIRE(c != nullptr);
    CHECK(c->status == Severity::Failure);
    CHECK(c->message.find("u^2 diverges") != std::string::npos);
}

TEST_CASE("validate_assumptions catches drivers breaking their declared modulus", "[problem]") {
    SwitchingProblem p = coupled_two_mode();
    p.driver.lipschitz = LipschitzModulus::exponential(0.01, 1.0);
    const ValidationReport r = validate_assumptions(p, {});
    REQUIRE(r.find("H1.lipschitz") != nullptr);
    CHECK(r.find("H1.lipschitz")->status == Severity::Failure);
    CHECK(validate_assumptions(coupled_two_mode(), {}).passed());
}

TEST_CASE("validate_assumptions cost conventions", "[problem]") {
    SECTION("nonpositive cost") {
        SwitchingProblem p = testing::constant_problem({1.0, 1.0}, 0.0, 1.0);
        const ValidationReport r = validate_assumptions(p, {});
        CHECK(r.find("H2.positivity")->status == Severity::Failure);
        CHECK(r.find("H3.terminal_zero")->status == Severity::Failure);
    }
    SECTION("H2' implies H2") {
        SwitchingProblem p = testing::constant_problem({1.0, 1.0, 1.0}, 0.8, 1.0);
        p.assumption = AssumptionMode::H2Prime;
        REQUIRE(validate_assumptions(p, {}).passed());
        p.assumption = AssumptionMode::H2;
        CHECK(validate_assumptions(p, {}).passed());
    }
    SECTION("equality in the triangle is only non-strict") {
        SwitchingProblem p = testing::constant_problem({1.0, 1.0, 1.0}, 1.0, 1.0);
        testing::set_cost_table(p, {{0.0, 0.5, 1.0}, {0.5, 0.0, 0.5}, {1.0, 0.5, 0.0}});
        p.assumption = AssumptionMode::H2Prime;
        const ValidationReport strict = validate_assumptions(p, {});
        CHECK(strict.passed());
        CHECK(strict.find("H2.triangle")->status == Severity::Warning);
        p.assumption = AssumptionMode::H2;
        CHECK(validate_assumptions(p, {}).find("H2.triangle")->status == Severity::Pass);
    }
    SECTION("bad discount") {
        SwitchingProblem p = testing::constant_problem({1.0}, 0.5, 0.0);
        CHECK_FALSE(validate_assumptions(p, {}).passed());
    }
}

TEST_CASE("validate_assumptions is deterministic in the seed", "[problem]") {
    SwitchingProblem p = coupled_two_mode();
    ValidationOptions opt;
    opt.seed = 42;
    const ValidationReport a = validate_assumptions(p, opt);
    const ValidationReport b = validate_assumptions(p, opt);
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t k = 0; k < a.checks.size(); ++k) {
        CHECK(a.checks[k].name == b.checks[k].name);
        CHECK(a.checks[k].status == b.checks[k].status);
        CHECK(a.checks[k].message == b.checks[k].message);
    }
}

TEST_CASE("required_discount", "[problem]") {
    SwitchingProblem p = testing::constant_problem({1.0, 2.0}, 0.5, 1.5);
    SECTION("u = 0") {
        const DiscountBound b = required_discount(p, 0.25);
        CHECK(b.penalization == Approx(0.25));
        CHECK(b.contraction == Approx(1.0));
        CHECK(b.meets_penalization);
        CHECK(b.meets_contraction);
    }
    SECTION("exponential modulus") {
        p.driver.lipschitz = LipschitzModulus::exponential(0.5, 1.0);
        CHECK(required_discount(p).contraction == Approx(1.5));
    }
    SECTION("window modulus") {
        p.driver.lipschitz = LipschitzModulus::window(1.0, 2.0);
        const DiscountBound b = required_discount(p, 0.25);
        CHECK(b.penalization == Approx(2.25));
        CHECK_FALSE(b.meets_penalization);
    }
    SECTION("monotone in the level") {
        double prev = 0.0;
        for (double L : {0.0, 0.1, 0.5, 1.0, 3.0}) {
            p.driver.lipschitz = LipschitzModulus::exponential(L, 1.0);
            const double c = required_discount(p).contraction;
            CHECK(c >= prev);
            prev = c;
        }
    }
}

TEST_CASE("penalized_driver", "[problem]") {
    const SwitchingProblem p = testing::constant_problem({2.0, 1.0}, 0.5, 1.0);
    const std::vector<double> x{0.0};
    const NodePoint pt{0.0, x, 0, 0};
    const std::vector<double> y{1.0, 1.6};
    CHECK(penalized_driver(p, 4.0, 0, pt, y, 0.0) == Approx(2.4));
    CHECK(penalized_driver(p, 0.0, 0, pt, y, 0.0) == 2.0);
    // Mode 2 sits above its obstacle 1.0 - 0.5.
    CHECK(penalized_driver(p, 4.0, 1, pt, y, 0.0) == 1.0);
    CHECK(negative_part(-0.3) == Approx(0.3));
    CHECK(negative_part(0.3) == 0.0);
}

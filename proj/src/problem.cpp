#include "rbsde/problem.hpp"

#include "rbsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace rbsde {

double LipschitzModulus::operator()(double t) const {
    switch (form) {
    case Form::Window:
        return t <= window_end ? level : 0.0;
    case Form::Exponential:
        return level * std::exp(-decay * t);
    }
    return 0.0;
}

double LipschitzModulus::integral() const {
    if (level == 0.0) return 0.0;
    if (form == Form::Window) {
        return std::isfinite(window_end) ? level * window_end
                                         : std::numeric_limits<double>::infinity();
    }
    return decay > 0.0 ? level / decay : std::numeric_limits<double>::infinity();
}

double LipschitzModulus::square_integral() const {
    if (level == 0.0) return 0.0;
    if (form == Form::Window) {
        return std::isfinite(window_end) ? level * level * window_end
                                         : std::numeric_limits<double>::infinity();
    }
    return decay > 0.0 ? level * level / (2.0 * decay) : std::numeric_limits<double>::infinity();
}

std::string to_string(AssumptionMode mode) {
    return mode == AssumptionMode::H2 ? "H2" : "H2-prime";
}

std::string to_string(Severity s) {
    switch (s) {
    case Severity::Pass:
        return "pass";
    case Severity::Warning:
        return "warning";
    case Severity::Failure:
        return "fail";
    }
    return "unknown";
}

bool ValidationReport::passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const AssumptionCheck& c) { return c.status == Severity::Failure; });
}

bool ValidationReport::has_warnings() const {
    return std::any_of(checks.begin(), checks.end(),
                       [](const AssumptionCheck& c) { return c.status == Severity::Warning; });
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

namespace {

constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

struct Sampler {
    std::mt19937_64 rng;
    std::uniform_real_distribution<double> unit{-1.0, 1.0};

    double sym(double radius) { return radius * unit(rng); }
    double time(double span) { return 0.5 * span * (unit(rng) + 1.0); }
    std::vector<double> state(const std::vector<double>& x0, double radius) {
        std::vector<double> x(x0);
        for (double& v : x) v += sym(radius);
        return x;
    }
};

void check_integrability(const SwitchingProblem& problem, ValidationReport& report) {
    const LipschitzModulus& u = problem.driver.lipschitz;
    AssumptionCheck check{"H1.lipschitz_integrability", Severity::Pass, {}, {}, {}, {}};
    if (u.level < 0.0) {
        check.status = Severity::Failure;
        check.message = "Lipschitz level must be nonnegative";
        report.checks.push_back(check);
        return;
    }
    const double i1 = u.integral();
    const double i2 = u.square_integral();
    std::ostringstream os;
    if (!std::isfinite(i2)) {
        check.status = Severity::Failure;
        os << "integral of u^2 diverges (u is a nonzero constant without a finite window)";
    } else if (!std::isfinite(i1)) {
        check.status = Severity::Failure;
        os << "integral of u diverges";
    } else {
        os << "int u = " << i1 << ", int u^2 = " << i2;
    }
    check.message = os.str();
    report.checks.push_back(check);
}

void check_lipschitz(const SwitchingProblem& problem, const ValidationOptions& opt,
                     Sampler& sampler, ValidationReport& report) {
    const std::size_t m = problem.m();
    const DriverSpec& f = problem.driver;
    AssumptionCheck lip{"H1.lipschitz", Severity::Pass, "sampled inequality holds", {}, {}, {}};
    AssumptionCheck zero{"H1.zero_point_bound", Severity::Pass, "sampled |f(t,x,0,0)| within bound",
                         {}, {}, {}};
    std::vector<double> y1(m), y2(m), zeros(m, 0.0);
    for (std::size_t s = 0; s < opt.sample_budget; ++s) {
        const double t = sampler.time(opt.time_span);
        const std::vector<double> x = sampler.state(problem.state.x0, opt.state_radius);
        for (std::size_t i = 0; i < m; ++i) {
            y1[i] = sampler.sym(opt.value_radius);
            y2[i] = sampler.sym(opt.value_radius);
        }
        const double z1 = sampler.sym(opt.value_radius);
        const double z2 = sampler.sym(opt.value_radius);
        const NodePoint p{t, x, kNoNode, kNoNode};
        for (std::size_t i = 0; i < m; ++i) {
            const double a = f(i, p, y1, z1);
            const double b = f(i, p, y2, z2);
            const double rhs = f.lipschitz(t) * (euclid(y1, y2) + std::abs(z1 - z2));
            const double scale = std::max({1.0, std::abs(a), std::abs(b)});
            if (lip.status == Severity::Pass && std::abs(a - b) > rhs + opt.rel_tol * scale) {
                lip.status = Severity::Failure;
                std::ostringstream os;
                os << "mode " << i + 1 << ": |f(y1,z1) - f(y2,z2)| = " << std::abs(a - b)
                   << " exceeds u(t)(|dy| + |dz|) = " << rhs;
                lip.message = os.str();
                lip.witness_modes = {i + 1};
                lip.witness_time = t;
                lip.witness_state = x;
            }
            const double f0 = f(i, p, zeros, 0.0);
            if (zero.status == Severity::Pass &&
                std::abs(f0) > f.zero_bound * (1.0 + opt.rel_tol) + opt.rel_tol) {
                // The bound only feeds horizon truncation, so exceeding it on the
                // sampling box is reported but not fatal.
                zero.status = Severity::Warning;
                std::ostringstream os;
                os << "mode " << i + 1 << ": |f(t,x,0,0)| = " << std::abs(f0)
                   << " exceeds declared bound " << f.zero_bound;
                zero.message = os.str();
                zero.witness_modes = {i + 1};
                zero.witness_time = t;
                zero.witness_state = x;
            }
        }
    }
    report.checks.push_back(lip);
    report.checks.push_back(zero);
}

void check_costs(const SwitchingProblem& problem, const ValidationOptions& opt, Sampler& sampler,
                 ValidationReport& report) {
    const std::size_t m = problem.m();
    const SwitchingCostSpec& g = problem.costs;
    const bool strict = problem.assumption == AssumptionMode::H2Prime;
    const double diag = strict ? g.diagonal : 0.0;

    AssumptionCheck diag_check{"H2.diagonal", Severity::Pass, "diagonal convention holds", {}, {},
                               {}};
    if (strict && diag < 0.0) {
        diag_check.status = Severity::Failure;
        diag_check.message = "declared diagonal cost g_ii must be nonnegative";
    }
    AssumptionCheck pos{"H2.positivity", Severity::Pass, "g_ij > 0 for i != j at all samples", {},
                        {}, {}};
    AssumptionCheck tri{"H2.triangle", Severity::Pass,
                        strict ? "strict triangle inequality holds at all samples"
                               : "triangle inequality holds at all samples",
                        {}, {}, {}};
    AssumptionCheck bnd{"H2.bounded", Severity::Pass, "|g_ij| within declared bound", {}, {}, {}};

    auto cost = [&](std::size_t i, std::size_t j, std::span<const double> x) {
        return i == j ? diag : g.eval(i, j, x);
    };

    const std::size_t samples = std::max<std::size_t>(1, opt.sample_budget);
    for (std::size_t s = 0; s < samples; ++s) {
        // The first sample sits at x0 so that constant tables are caught exactly.
        const std::vector<double> x =
            s == 0 ? problem.state.x0 : sampler.state(problem.state.x0, opt.state_radius);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                const double gij = cost(i, j, x);
                if (pos.status == Severity::Pass && !(gij > 0.0)) {
                    pos.status = Severity::Failure;
                    std::ostringstream os;
                    os << "g_" << i + 1 << j + 1 << " = " << gij << " is not positive";
                    pos.message = os.str();
                    pos.witness_modes = {i + 1, j + 1};
                    pos.witness_state = x;
                }
                if (bnd.status == Severity::Pass && g.bound > 0.0 &&
                    std::abs(gij) > g.bound * (1.0 + opt.rel_tol)) {
                    bnd.status = Severity::Warning;
                    std::ostringstream os;
                    os << "|g_" << i + 1 << j + 1 << "| = " << std::abs(gij)
                       << " exceeds declared bound " << g.bound;
                    bnd.message = os.str();
                    bnd.witness_modes = {i + 1, j + 1};
                    bnd.witness_state = x;
                }
                for (std::size_t l = 0; l < m; ++l) {
                    if (l == j) continue;
                    const double lhs = gij + cost(j, l, x);
                    const double rhs = cost(i, l, x);
                    const double slack = lhs - rhs;
                    const double tol = opt.rel_tol * std::max(1.0, std::abs(rhs));
                    if (slack < -tol) {
                        if (tri.status != Severity::Failure) {
                            tri.status = Severity::Failure;
                            std::ostringstream os;
                            os << "g_" << i + 1 << j + 1 << " + g_" << j + 1 << l + 1 << " = "
                               << lhs << " < g_" << i + 1 << l + 1 << " = " << rhs;
                            tri.message = os.str();
                            tri.witness_modes = {i + 1, j + 1, l + 1};
                            tri.witness_state = x;
                        }
                    } else if (strict && slack <= tol && tri.status == Severity::Pass) {
                        tri.status = Severity::Warning;
                        std::ostringstream os;
                        os << "only the non-strict triangle inequality holds: g_" << i + 1 << j + 1
                           << " + g_" << j + 1 << l + 1 << " = g_" << i + 1 << l + 1;
                        tri.message = os.str();
                        tri.witness_modes = {i + 1, j + 1, l + 1};
                        tri.witness_state = x;
                    }
                }
            }
        }
    }
    report.checks.push_back(diag_check);
    report.checks.push_back(pos);
    report.checks.push_back(tri);
    report.checks.push_back(bnd);

    AssumptionCheck h3{"H3.terminal_zero", Severity::Pass,
                       "xi = 0 satisfies 0 >= max_j(0 - g_ij) since g_ij > 0", {}, {}, {}};
    if (pos.status == Severity::Failure) {
        h3.status = Severity::Failure;
        h3.message = "zero terminal value needs g_ij >= 0";
        h3.witness_modes = pos.witness_modes;
    }
    report.checks.push_back(h3);
}

}  // namespace

ValidationReport validate_assumptions(const SwitchingProblem& problem,
                                      const ValidationOptions& options) {
    if (options.sample_budget == 0) {
        throw InvalidArgument("validation needs a positive sample budget");
    }
    ValidationReport report;

    AssumptionCheck modes{"modes", Severity::Pass, "m >= 1", {}, {}, {}};
    if (problem.m() == 0) {
        modes.status = Severity::Failure;
        modes.message = "at least one mode is required";
        report.checks.push_back(modes);
        return report;
    }
    report.checks.push_back(modes);

    AssumptionCheck disc{"discount", Severity::Pass, "r > 0", {}, {}, {}};
    if (!(problem.discount > 0.0) || !std::isfinite(problem.discount)) {
        disc.status = Severity::Failure;
        disc.message = "discount rate r must be positive and finite";
    }
    report.checks.push_back(disc);

    if (!problem.driver.eval || (problem.m() > 1 && !problem.costs.eval)) {
        report.checks.push_back({"populated", Severity::Failure,
                                 "driver or switching-cost evaluator missing", {}, {}, {}});
        return report;
    }

    Sampler sampler{std::mt19937_64(options.seed)};
    check_integrability(problem, report);
    check_lipschitz(problem, options, sampler, report);
    check_costs(problem, options, sampler, report);
    return report;
}

DiscountBound required_discount(const SwitchingProblem& problem, double margin) {
    // Both supported forms of u attain their supremum at t = 0.
    const double u0 = problem.driver.lipschitz.sup();
    DiscountBound b{};
    b.penalization = u0 * u0 + u0 + margin;
    b.contraction = 2.0 * u0 * u0 + 1.0;
    b.meets_penalization = problem.discount >= b.penalization;
    b.meets_contraction = problem.discount >= b.contraction;
    return b;
}

double penalized_driver(const SwitchingProblem& problem, double n, std::size_t i,
                        const NodePoint& p, std::span<const double> ybar, double z) {
    double value = problem.driver(i, p, ybar, z);
    if (n == 0.0) return value;
    double penalty = 0.0;
    for (std::size_t j = 0; j < problem.m(); ++j) {
        penalty += negative_part(ybar[i] - ybar[j] + problem.costs(i, j, p.x));
    }
    return value + n * penalty;
}

}  // namespace rbsde

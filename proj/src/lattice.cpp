#include "rbsde/lattice.hpp"

#include "rbsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rbsde {

TimeGrid::TimeGrid(double horizon, std::size_t steps, double discount)
    : horizon_(horizon), steps_(steps), dt_(0.0), discount_(discount) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidArgument("time grid horizon must be positive and finite");
    }
    if (steps == 0) {
        throw InvalidArgument("time grid needs at least one step");
    }
    if (!(discount > 0.0)) {
        throw InvalidArgument("discount rate must be positive");
    }
    dt_ = horizon / static_cast<double>(steps);
    weights_.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        weights_[k] = std::exp(-discount * time(k));
    }
}

std::string to_string(StateKind kind) {
    switch (kind) {
    case StateKind::DeterministicPath:
        return "deterministic";
    case StateKind::Binomial:
        return "binomial";
    case StateKind::Trinomial:
        return "trinomial";
    }
    return "unknown";
}

StateKind state_kind_from_string(const std::string& name) {
    if (name == "deterministic" || name == "deterministic-path") return StateKind::DeterministicPath;
    if (name == "binomial") return StateKind::Binomial;
    if (name == "trinomial") return StateKind::Trinomial;
    throw InvalidArgument("unknown state kind '" + name + "'");
}

Lattice::Lattice(TimeGrid grid, std::size_t state_dim, std::vector<std::size_t> node_counts,
                 std::vector<double> states, std::vector<std::size_t> branch_offsets,
                 std::vector<Branch> branch_list, StateKind kind)
    : grid_(std::move(grid)),
      kind_(kind),
      state_dim_(state_dim),
      node_counts_(std::move(node_counts)),
      states_(std::move(states)),
      branch_offsets_(std::move(branch_offsets)),
      branches_(std::move(branch_list)) {
    const std::size_t n_steps = grid_.steps();
    if (node_counts_.size() != n_steps + 1) {
        throw InvalidArgument("lattice needs a node count for every time step");
    }
    offsets_.resize(n_steps + 2, 0);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        offsets_[k + 1] = offsets_[k] + node_counts_[k];
    }
    if (states_.size() != total_nodes() * state_dim_) {
        throw InvalidArgument("lattice state table has the wrong size");
    }
    const std::size_t inner = offsets_[n_steps];
    if (branch_offsets_.size() != inner + 1) {
        throw InvalidArgument("lattice branch table has the wrong size");
    }

    for (std::size_t k = 0; k < n_steps; ++k) {
        for (std::size_t j = 0; j < nodes(k); ++j) {
            double p_sum = 0.0;
            double mean = 0.0;
            double second = 0.0;
            for (const Branch& b : branches(k, j)) {
                if (b.prob < 0.0 || b.child >= nodes(k + 1)) {
                    throw InvalidArgument("lattice branch with negative probability or bad child");
                }
                p_sum += b.prob;
                mean += b.prob * b.dB;
                second += b.prob * b.dB * b.dB;
            }
            const double dt = grid_.dt();
            if (std::abs(p_sum - 1.0) > 1e-12 || std::abs(mean) > 1e-12 ||
                (kind_ != StateKind::DeterministicPath && std::abs(second - dt) > 1e-12)) {
                std::ostringstream os;
                os << "lattice moment check failed at step " << k << " node " << j;
                throw InvalidArgument(os.str());
            }
        }
    }

    reach_.assign(total_nodes(), 0.0);
    reach_[0] = 1.0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        for (std::size_t j = 0; j < nodes(k); ++j) {
            const double pj = reach_[offsets_[k] + j];
            for (const Branch& b : branches(k, j)) {
                reach_[offsets_[k + 1] + b.child] += pj * b.prob;
            }
        }
    }
}

std::span<const double> Lattice::state(std::size_t step, std::size_t node) const {
    return {states_.data() + (offsets_[step] + node) * state_dim_, state_dim_};
}

std::span<const Branch> Lattice::branches(std::size_t step, std::size_t node) const {
    const std::size_t idx = offsets_[step] + node;
    const std::size_t begin = branch_offsets_[idx];
    const std::size_t end = branch_offsets_[idx + 1];
    return {branches_.data() + begin, end - begin};
}

std::span<const double> Lattice::reach(std::size_t step) const {
    return {reach_.data() + offsets_[step], node_counts_[step]};
}

std::size_t Lattice::path_count() const {
    // Count by forward propagation of path multiplicities.
    constexpr std::size_t cap = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> count(nodes(0), 1);
    for (std::size_t k = 0; k < steps(); ++k) {
        std::vector<std::size_t> next(nodes(k + 1), 0);
        for (std::size_t j = 0; j < nodes(k); ++j) {
            for (const Branch& b : branches(k, j)) {
                const std::size_t add = count[j];
                next[b.child] = (next[b.child] > cap - add) ? cap : next[b.child] + add;
            }
        }
        count = std::move(next);
    }
    std::size_t total = 0;
    for (std::size_t c : count) {
        total = (total > cap - c) ? cap : total + c;
    }
    return total;
}

void Lattice::check_next(std::size_t step, std::size_t size) const {
    if (step >= steps()) {
        throw InvalidArgument("conditional expectation requested at the terminal step");
    }
    if (size != nodes(step + 1)) {
        throw InvalidArgument("field size does not match the node count of the next step");
    }
}

double Lattice::cond_expect_at(std::size_t step, std::size_t node,
                               std::span<const double> next) const {
    return cond_expect_at(step, node, next, 1, 0);
}

double Lattice::cond_increment_at(std::size_t step, std::size_t node,
                                  std::span<const double> next) const {
    return cond_increment_at(step, node, next, 1, 0);
}

double Lattice::cond_expect_at(std::size_t step, std::size_t node, std::span<const double> next,
                               std::size_t stride, std::size_t mode) const {
    double acc = 0.0;
    for (const Branch& b : branches(step, node)) {
        acc += b.prob * next[b.child * stride + mode];
    }
    return acc;
}

double Lattice::cond_increment_at(std::size_t step, std::size_t node,
                                  std::span<const double> next, std::size_t stride,
                                  std::size_t mode) const {
    double acc = 0.0;
    for (const Branch& b : branches(step, node)) {
        acc += b.prob * next[b.child * stride + mode] * b.dB;
    }
    return acc / grid_.dt();
}

std::vector<double> Lattice::cond_expect(std::size_t step, std::span<const double> next) const {
    check_next(step, next.size());
    std::vector<double> out(nodes(step));
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = cond_expect_at(step, j, next);
    }
    return out;
}

std::vector<double> Lattice::cond_expect_with_increment(std::size_t step,
                                                        std::span<const double> next) const {
    check_next(step, next.size());
    if (!(grid_.dt() > 0.0)) {
        throw InvalidArgument("increment expectation needs dt > 0");
    }
    std::vector<double> out(nodes(step));
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = cond_increment_at(step, j, next);
    }
    return out;
}

double truncate_horizon(double discount, double driver_bound, double tail_tolerance) {
    if (!(discount > 0.0) || !(driver_bound > 0.0) || !(tail_tolerance > 0.0)) {
        throw InvalidArgument("truncate_horizon needs positive discount, driver bound and tolerance");
    }
    const double ratio = driver_bound / (discount * tail_tolerance);
    return std::max(0.0, std::log(ratio) / discount);
}

namespace {

double eval_or(const std::function<double(double)>& fn, double t, double fallback) {
    return fn ? fn(t) : fallback;
}

}  // namespace

Lattice build_lattice(const StateModelSpec& spec, const TimeGrid& grid) {
    const std::size_t n_steps = grid.steps();
    const double dt = grid.dt();
    const std::size_t dim = spec.x0.size();
    if (dim == 0) {
        throw InvalidArgument("state model needs a nonempty initial state");
    }

    std::vector<std::size_t> counts(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        switch (spec.kind) {
        case StateKind::DeterministicPath:
            counts[k] = 1;
            break;
        case StateKind::Binomial:
            counts[k] = k + 1;
            break;
        case StateKind::Trinomial:
            counts[k] = 2 * k + 1;
            break;
        }
    }
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});

    std::vector<double> states;
    states.reserve(total * dim);
    std::vector<std::size_t> branch_offsets;
    std::vector<Branch> branches;
    branch_offsets.reserve(total - counts[n_steps] + 1);
    branch_offsets.push_back(0);

    if (spec.kind == StateKind::DeterministicPath) {
        std::vector<double> x = spec.x0;
        for (std::size_t k = 0; k <= n_steps; ++k) {
            const double t = grid.time(k);
            if (spec.path) {
                x = spec.path(t);
                if (x.size() != dim) {
                    throw InvalidArgument("deterministic path returned a state of the wrong dimension");
                }
            } else if (k > 0) {
                x[0] += eval_or(spec.drift, grid.time(k - 1), 0.0) * dt;
            }
            states.insert(states.end(), x.begin(), x.end());
            if (k < n_steps) {
                branches.push_back({0, 1.0, 0.0});
                branch_offsets.push_back(branches.size());
            }
        }
    } else {
        const bool binomial = spec.kind == StateKind::Binomial;
        // Brownian level spacing between adjacent nodes.
        const double h = binomial ? std::sqrt(dt) : std::sqrt(3.0 * dt);
        double drift_acc = 0.0;
        for (std::size_t k = 0; k <= n_steps; ++k) {
            const double t = grid.time(k);
            if (k > 0) {
                drift_acc += eval_or(spec.drift, grid.time(k - 1), 0.0) * dt;
            }
            const double sigma = eval_or(spec.volatility, t, 0.0);
            if (sigma < 0.0 || !std::isfinite(sigma)) {
                throw InvalidArgument("volatility evaluator returned a negative or non-finite value");
            }
            for (std::size_t j = 0; j < counts[k]; ++j) {
                const double level = binomial
                                         ? h * (2.0 * static_cast<double>(j) - static_cast<double>(k))
                                         : h * (static_cast<double>(j) - static_cast<double>(k));
                states.push_back(spec.x0[0] + drift_acc + sigma * level);
                for (std::size_t c = 1; c < dim; ++c) {
                    states.push_back(spec.x0[c]);
                }
                if (k < n_steps) {
                    if (binomial) {
                        branches.push_back({j, 0.5, -h});
                        branches.push_back({j + 1, 0.5, h});
                    } else {
                        branches.push_back({j, 1.0 / 6.0, -h});
                        branches.push_back({j + 1, 2.0 / 3.0, 0.0});
                        branches.push_back({j + 2, 1.0 / 6.0, h});
                    }
                    branch_offsets.push_back(branches.size());
                }
            }
        }
    }

    return Lattice(grid, dim, std::move(counts), std::move(states), std::move(branch_offsets),
                   std::move(branches), spec.kind);
}

NodeField::NodeField(const Lattice& lattice, std::size_t modes, double init)
    : modes_(modes), offsets_(lattice.offsets().begin(), lattice.offsets().end()) {
    data_.assign(lattice.total_nodes() * modes, init);
}

NodeField& NodeField::operator-=(const NodeField& other) {
    if (!same_shape(other)) throw InvalidArgument("field shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

NodeField& NodeField::operator+=(const NodeField& other) {
    if (!same_shape(other)) throw InvalidArgument("field shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

NodeField& NodeField::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

double NodeField::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool NodeField::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

NodeField operator-(NodeField a, const NodeField& b) {
    a -= b;
    return a;
}

}  // namespace rbsde

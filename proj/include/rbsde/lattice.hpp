#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rbsde {

/// Uniform grid t_k = k*dt on [0, T] with precomputed discount weights e^{-r t_k}.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps, double discount);

    double horizon() const { return horizon_; }
    std::size_t steps() const { return steps_; }
    double dt() const { return dt_; }
    double discount() const { return discount_; }
    double time(std::size_t k) const { return static_cast<double>(k) * dt_; }
    double weight(std::size_t k) const { return weights_[k]; }
    std::span<const double> weights() const { return weights_; }

private:
    double horizon_;
    std::size_t steps_;
    double dt_;
    double discount_;
    std::vector<double> weights_;
};

enum class StateKind { DeterministicPath, Binomial, Trinomial };

std::string to_string(StateKind kind);
StateKind state_kind_from_string(const std::string& name);

/// Description of the state process X.
///
/// Tree kinds move the first state component as
///   X_{k,j} = x0 + sum_{l<k} drift(t_l) dt + volatility(t_k) * B_{k,j}
/// where B_{k,j} is the Brownian level of node j at step k. Remaining components
/// stay at their initial values. The deterministic kind either follows `path`
/// when set, or integrates `drift` from x0.
struct StateModelSpec {
    StateKind kind = StateKind::DeterministicPath;
    std::vector<double> x0 = {0.0};
    std::function<double(double)> drift;
    std::function<double(double)> volatility;
    std::function<std::vector<double>(double)> path;
};

struct Branch {
    std::size_t child;
    double prob;
    double dB;
};

/// Recombining chain carrying both X and the Brownian increments of the BSDE.
class Lattice {
public:
    Lattice(TimeGrid grid, std::size_t state_dim, std::vector<std::size_t> node_counts,
            std::vector<double> states, std::vector<std::size_t> branch_offsets,
            std::vector<Branch> branches, StateKind kind);

    const TimeGrid& grid() const { return grid_; }
    StateKind kind() const { return kind_; }
    std::size_t steps() const { return grid_.steps(); }
    std::size_t state_dim() const { return state_dim_; }
    std::size_t nodes(std::size_t step) const { return node_counts_[step]; }
    std::size_t offset(std::size_t step) const { return offsets_[step]; }
    std::size_t total_nodes() const { return offsets_.back(); }
    std::span<const std::size_t> offsets() const { return offsets_; }

    std::span<const double> state(std::size_t step, std::size_t node) const;
    std::span<const Branch> branches(std::size_t step, std::size_t node) const;

    /// Probability of reaching each node at `step` from the root.
    std::span<const double> reach(std::size_t step) const;

    /// Number of distinct root-to-terminal paths, saturating at SIZE_MAX.
    std::size_t path_count() const;

    /// Probability-weighted average over children: E[v_{k+1} | node].
    std::vector<double> cond_expect(std::size_t step, std::span<const double> next) const;

    /// Sum_b p_b v_b dB_b / dt: the Z-recovery operator.
    std::vector<double> cond_expect_with_increment(std::size_t step,
                                                   std::span<const double> next) const;

    double cond_expect_at(std::size_t step, std::size_t node, std::span<const double> next) const;
    double cond_increment_at(std::size_t step, std::size_t node,
                             std::span<const double> next) const;

    /// Strided versions reading component `mode` of a node-major field with `stride` values
    /// per node.
    double cond_expect_at(std::size_t step, std::size_t node, std::span<const double> next,
                          std::size_t stride, std::size_t mode) const;
    double cond_increment_at(std::size_t step, std::size_t node, std::span<const double> next,
                             std::size_t stride, std::size_t mode) const;

private:
    void check_next(std::size_t step, std::size_t size) const;

    TimeGrid grid_;
    StateKind kind_;
    std::size_t state_dim_;
    std::vector<std::size_t> node_counts_;
    std::vector<std::size_t> offsets_;
    std::vector<double> states_;
    std::vector<std::size_t> branch_offsets_;
    std::vector<Branch> branches_;
    std::vector<double> reach_;
};

/// Smallest T with e^{-rT} B_f / r <= tail_tolerance.
double truncate_horizon(double discount, double driver_bound, double tail_tolerance);

Lattice build_lattice(const StateModelSpec& spec, const TimeGrid& grid);

/// Values indexed by (mode, step, node), node-major with modes contiguous.
class NodeField {
public:
    NodeField() = default;
    NodeField(const Lattice& lattice, std::size_t modes, double init = 0.0);

    std::size_t modes() const { return modes_; }
    std::size_t steps() const { return offsets_.empty() ? 0 : offsets_.size() - 2; }
    std::size_t nodes(std::size_t step) const { return offsets_[step + 1] - offsets_[step]; }

    double& operator()(std::size_t mode, std::size_t step, std::size_t node) {
        return data_[(offsets_[step] + node) * modes_ + mode];
    }
    double operator()(std::size_t mode, std::size_t step, std::size_t node) const {
        return data_[(offsets_[step] + node) * modes_ + mode];
    }

    /// All modes at one node.
    std::span<double> at(std::size_t step, std::size_t node) {
        return {data_.data() + (offsets_[step] + node) * modes_, modes_};
    }
    std::span<const double> at(std::size_t step, std::size_t node) const {
        return {data_.data() + (offsets_[step] + node) * modes_, modes_};
    }

    /// All nodes and modes of one time step.
    std::span<double> step(std::size_t k) {
        return {data_.data() + offsets_[k] * modes_, nodes(k) * modes_};
    }
    std::span<const double> step(std::size_t k) const {
        return {data_.data() + offsets_[k] * modes_, nodes(k) * modes_};
    }

    std::span<const double> raw() const { return data_; }
    std::span<double> raw() { return data_; }

    bool same_shape(const NodeField& other) const {
        return modes_ == other.modes_ && offsets_ == other.offsets_;
    }

    NodeField& operator-=(const NodeField& other);
    NodeField& operator+=(const NodeField& other);
    NodeField& operator*=(double s);
    double max_abs() const;
    bool all_finite() const;

private:
    std::size_t modes_ = 0;
    std::vector<std::size_t> offsets_;  // steps + 2 entries, last one is total nodes
    std::vector<double> data_;
};

NodeField operator-(NodeField a, const NodeField& b);

}  // namespace rbsde

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "equihor/model.hpp"

namespace equihor {

/// Spatial part of a grid.
struct SpaceGrid {
    double x_min = -4.0;
    double x_max = 4.0;
    std::size_t n_x = 101;

    double dx() const noexcept { return (x_max - x_min) / static_cast<double>(n_x - 1); }
    double x(std::size_t i) const noexcept { return x_min + dx() * static_cast<double>(i); }
    bool operator==(const SpaceGrid&) const = default;
};

/// Uniform time x state grid. Time index k runs 0..n_t, space index i runs 0..n_x-1.
class Grid1D {
public:
    Grid1D(double x_min, double x_max, std::size_t n_x, double t_start, double t_end, std::size_t n_t);
    Grid1D(const SpaceGrid& space, double t_start, double t_end, std::size_t n_t);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t n_x() const noexcept { return n_x_; }
    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    std::size_t n_t() const noexcept { return n_t_; }
    double dx() const noexcept { return dx_; }
    double dt() const noexcept { return dt_; }

    double x(std::size_t i) const noexcept { return x_min_ + dx_ * static_cast<double>(i); }
    // The last node is pinned to t_end exactly.
    double t(std::size_t k) const noexcept {
        return k == n_t_ ? t_end_ : t_start_ + dt_ * static_cast<double>(k);
    }

    SpaceGrid space() const noexcept { return {x_min_, x_max_, n_x_}; }
    bool same_space(const Grid1D& other) const noexcept { return space() == other.space(); }

    /// Nearest time index, clamped to [0, n_t].
    std::size_t nearest_time(double t) const noexcept;
    /// Index of the node whose time matches t to 1e-9 dt; throws DomainError otherwise.
    std::size_t time_index(double t) const;

private:
    double x_min_, x_max_;
    std::size_t n_x_;
    double t_start_, t_end_;
    std::size_t n_t_;
    double dx_, dt_;
};

/// Scalar function tabulated on a Grid1D, stored row-major in (time, space).
class ValueField {
public:
    explicit ValueField(Grid1D grid);

    const Grid1D& grid() const noexcept { return grid_; }

    double& at(std::size_t k, std::size_t i) noexcept { return values_[k * grid_.n_x() + i]; }
    double at(std::size_t k, std::size_t i) const noexcept { return values_[k * grid_.n_x() + i]; }

    std::span<double> row(std::size_t k) noexcept { return {values_.data() + k * grid_.n_x(), grid_.n_x()}; }
    std::span<const double> row(std::size_t k) const noexcept {
        return {values_.data() + k * grid_.n_x(), grid_.n_x()};
    }
    const std::vector<double>& values() const noexcept { return values_; }

    // One-sided difference chosen by the sign of `drift`: forward when drift >= 0.
    double upwind_derivative(std::size_t k, std::size_t i, double drift) const noexcept;
    double second_derivative(std::size_t k, std::size_t i) const noexcept;

    /// Linear interpolation in x on row k; constant extension outside the grid.
    double interpolate(std::size_t k, double x) const noexcept;

private:
    Grid1D grid_;
    std::vector<double> values_;
};

using StrategySlice = std::vector<double>;

/// Feedback control u = Psi(t_k, x_i) tabulated on a Grid1D.
class StrategyTable {
public:
    explicit StrategyTable(Grid1D grid);

    const Grid1D& grid() const noexcept { return grid_; }
    double& at(std::size_t k, std::size_t i) noexcept { return controls_[k * grid_.n_x() + i]; }
    double at(std::size_t k, std::size_t i) const noexcept { return controls_[k * grid_.n_x() + i]; }
    std::span<double> row(std::size_t k) noexcept { return {controls_.data() + k * grid_.n_x(), grid_.n_x()}; }
    std::span<const double> row(std::size_t k) const noexcept {
        return {controls_.data() + k * grid_.n_x(), grid_.n_x()};
    }
    const std::vector<double>& values() const noexcept { return controls_; }

    /// Nearest node in time; in space the shared value of the bracketing nodes when they agree,
    /// else the nearest node. Clamped to the grid.
    double lookup(double t, double x) const noexcept;

private:
    Grid1D grid_;
    std::vector<double> controls_;
};

/// Anything that maps (t, x) to a control on the grid.
class FeedbackPolicy {
public:
    virtual ~FeedbackPolicy() = default;
    virtual double control(double t, double x) const = 0;
};

class TablePolicy final : public FeedbackPolicy {
public:
    explicit TablePolicy(const StrategyTable& table) : table_(&table) {}
    double control(double t, double x) const override { return table_->lookup(t, x); }

private:
    const StrategyTable* table_;
};

/// Linear interpolation of one spatial slice; constant extension outside the grid.
double interpolate_row(std::span<const double> row, const SpaceGrid& space, double x) noexcept;

/// Policy sampled at every node of `grid`.
StrategyTable tabulate(const FeedbackPolicy& policy, const Grid1D& grid);

// Weight multiplying g0 at (t, x).
using WeightFn = std::function<double(double t, double x)>;
// Semilinear generator (t, x, u, y) -> rate.
using Generator = std::function<double(double t, double x, double u, double y)>;

UpwindGradient upwind_gradient(std::span<const double> v, double dx, std::size_t i) noexcept;
double second_difference(std::span<const double> v, double dx, std::size_t i) noexcept;

/// Smallest m >= 1 with dt/m <= 0.9 dx^2 / (max sigma^2 + max |b| dx), maxima over grid nodes
/// (all time levels) and controls.
std::size_t cfl_steps(const ProblemSpec& p, const Grid1D& grid);
double cfl_bound(const ProblemSpec& p, const Grid1D& grid);
/// Smallest n_t for which [t_start, t_end] needs no substeps.
std::size_t cfl_time_steps(const ProblemSpec& p, const SpaceGrid& space, double t_start, double t_end);

struct StepResult {
    std::vector<double> values;
    // Controls selected from next_slice, i.e. the feedback at the upper time t_k + dt.
    StrategySlice controls;
};

// Time integration of the fixed-control steps. Heun is the two-stage strong-stability-preserving
// scheme: an average of forward-Euler stages, so it stays monotone under the same CFL bound.
enum class TimeScheme { euler, heun };

/// Explicit monotone backward stepper. Coefficients, weights and the optimizing control are
/// evaluated at the upper time of every substep; boundary nodes are extrapolated linearly.
/// The HJB step is always forward Euler; `scheme` applies to linear and semilinear steps.
class BackwardStepper {
public:
    BackwardStepper(const ProblemSpec& p, const Grid1D& grid, TimeScheme scheme = TimeScheme::euler);
    BackwardStepper(const ProblemSpec& p, const Grid1D& grid, std::size_t substeps,
                    TimeScheme scheme = TimeScheme::euler);

    std::size_t substeps() const noexcept { return substeps_; }
    const Grid1D& grid() const noexcept { return grid_; }
    TimeScheme scheme() const noexcept { return scheme_; }

    // Step from t_k + dt down to t_k with the control re-selected every substep.
    StepResult hjb(std::span<const double> next, double t_k, const CostRate& cost) const;
    // Fixed control per space index.
    std::vector<double> linear(std::span<const double> next, double t_k, std::span<const double> controls,
                               const CostRate& cost) const;
    // Fixed control, running rate depending on the current value.
    std::vector<double> semilinear(std::span<const double> next, double t_k, std::span<const double> controls,
                                   const Generator& gen) const;

    /// argmin of the upwind Hamiltonian built from `values` at time t.
    StrategySlice feedback(std::span<const double> values, double t, const CostRate& cost) const;

private:
    using Rate = std::function<double(double t, double x, double u, double v)>;
    std::vector<double> fixed_control(std::span<const double> next, double t_k, std::span<const double> controls,
                                      const Rate& rate) const;

    const ProblemSpec* p_;
    Grid1D grid_;
    std::size_t substeps_;
    TimeScheme scheme_;
};

/// One backward step of the HJB equation with running cost weight(t, x) g0.
StepResult hjb_step(const ProblemSpec& p, const Grid1D& grid, std::span<const double> next_slice, double t_k,
                    const WeightFn& weight);

/// One backward step under a fixed control slice with running cost weight(t) g0.
std::vector<double> linear_step(const ProblemSpec& p, const Grid1D& grid, std::span<const double> next_slice,
                                double t_k, std::span<const double> control_slice, const TimeMap& weight);

/// weight(t, x) * g0(t, x, u).
CostRate weighted_cost(const ProblemSpec& p, WeightFn weight);
/// weight(t) * g0(t, x, u).
CostRate time_weighted_cost(const ProblemSpec& p, TimeMap weight);

}  // namespace equihor

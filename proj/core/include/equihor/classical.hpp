#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "equihor/model.hpp"
#include "equihor/pde.hpp"

namespace equihor {

using TerminalFn = std::function<double(double x)>;

/// Value field and its feedback strategy. Strategy row k is the argmin of the
/// upwind Hamiltonian built from value row k at time t_k.
struct Solution {
    ValueField value;
    StrategyTable strategy;
    std::size_t substeps = 1;
};

/// Backward HJB sweep from `terminal` at grid.t_end() with a general running cost rate.
Solution solve_backward(const ProblemSpec& p, const Grid1D& grid, const CostRate& cost,
                        std::span<const double> terminal);

/// Backward HJB sweep with running cost weight(t, x) g0(t, x, u).
Solution solve_finite_horizon(const ProblemSpec& p, const Grid1D& grid, const WeightFn& weight,
                              const TerminalFn& terminal);

struct InfiniteHorizonResult {
    // Truncation horizon T with tail_bound(T) <= tol, a multiple of dt.
    double horizon = 0.0;
    double tail = 0.0;
    // V^T restricted to the reporting window [0, T_hat].
    ValueField window;
    // V^T on [0, T] and V^{2T} restricted to [0, T], on identical nodes.
    ValueField truncated;
    ValueField doubled;
    StrategyTable strategy;
};

/// Approximates the infinite-horizon value with unit weight on [0, T_hat] by one solve at a
/// tail-certified horizon. `dt` is the outer time step.
InfiniteHorizonResult solve_infinite_horizon(const ProblemSpec& p, const SpaceGrid& space, double t_window,
                                             double tol_tail, double dt);

/// Smallest T >= t_min, a multiple of dt above t_min, with tail_bound(p, T) <= tol.
double truncation_horizon(const ProblemSpec& p, double tol, double t_min, double dt);

struct TailSolution {
    double delta = 0.0;
    double anchor = 0.0;
    double horizon = 0.0;
    ValueField value;
    StrategyTable strategy;
};

/// Classical problem with running cost exp(-delta t) g0 on [t_anchor, T*], terminal 0, where
/// cost_sup exp(-delta T*) / delta <= tol_tail and T* >= min_horizon.
TailSolution solve_discounted_tail(const ProblemSpec& p, double delta, double t_anchor, const SpaceGrid& space,
                                   double tol_tail, double dt, double min_horizon = 0.0);

/// Pre-committed problem anchored at t0: running cost g(t0, t, x, u) on [t0, t1], given terminal.
Solution precommit_value(const ProblemSpec& p, const DiscountSpec& d, double t0, double t1,
                         std::span<const double> terminal, const SpaceGrid& space, std::size_t n_t);

/// Coefficients and costs translated in time: s -> s + shift.
ProblemSpec shifted_problem(const ProblemSpec& p, double shift);

/// Sup-norm gap between the problem anchored at t_shift and the shifted problem anchored at 0,
/// both solved over a window of the given length with zero terminal.
double shift_equivalence_check(const ProblemSpec& p, const DiscountSpec& d, double t_shift,
                               const SpaceGrid& space, double window, std::size_t n_t);

/// Rows k0..k1 of a field as a field on the sub-grid.
ValueField restrict_rows(const ValueField& field, std::size_t k0, std::size_t k1);
StrategyTable restrict_rows(const StrategyTable& table, std::size_t k0, std::size_t k1);

}  // namespace equihor

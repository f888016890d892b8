#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "equihor/classical.hpp"
#include "equihor/model.hpp"
#include "equihor/pde.hpp"

namespace equihor {

/// Theta(rho_j, t_k, x_i) for j <= k on a grid over [tau, tau + T0] that serves as both the
/// rho grid and the t grid. Slice j holds rows k = j..N.
class BiTimeField {
public:
    BiTimeField(double tau, Grid1D grid);

    double anchor() const noexcept { return tau_; }
    const Grid1D& grid() const noexcept { return grid_; }
    std::size_t n_t() const noexcept { return grid_.n_t(); }

    std::span<double> slice(std::size_t j, std::size_t k);
    std::span<const double> slice(std::size_t j, std::size_t k) const;
    double at(std::size_t j, std::size_t k, std::size_t i) const { return slice(j, k)[i]; }
    std::span<const double> diagonal(std::size_t k) const { return slice(k, k); }

    /// Slice rho_j as a field on [t_j, t_N].
    ValueField slice_field(std::size_t j) const;
    /// Theta(t_k, t_k, .) for k = 0..N.
    ValueField diagonal_field() const;

    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t offset(std::size_t j, std::size_t k) const;

    double tau_;
    Grid1D grid_;
    std::vector<double> values_;
};

struct EquilibriumSolution {
    BiTimeField theta;
    // Row k is the diagonal argmin at t_k; it drives the step t_k -> t_{k-1} of every slice.
    StrategyTable strategy;
    std::size_t substeps = 1;
};

/// Backward sweep of the two-time system on [tau, tau + T0] with n_t steps. Every slice starts
/// from exp(delta tau) V_tail(tau + T0, .).
EquilibriumSolution solve_equilibrium_system(const ProblemSpec& p, const DiscountSpec& d, double tau,
                                             const SpaceGrid& space, std::size_t n_t, const TailSolution& tail);

/// Equilibrium value and strategy on [tau, T*]: the diagonal up to the seam tau + T0, the scaled
/// tail after it.
class GluedSolution final : public FeedbackPolicy {
public:
    GluedSolution(double tau, double delta, ValueField head_value, StrategyTable head_strategy,
                  ValueField tail_value, StrategyTable tail_strategy);

    double anchor() const noexcept { return tau_; }
    double delta() const noexcept { return delta_; }
    double seam() const noexcept { return head_value_.grid().t_end(); }
    double horizon() const noexcept { return tail_value_.grid().t_end(); }

    const ValueField& head_value() const noexcept { return head_value_; }
    const StrategyTable& head_strategy() const noexcept { return head_strategy_; }
    // exp(delta tau) V_tail on [seam, T*].
    const ValueField& tail_value() const noexcept { return tail_value_; }
    const StrategyTable& tail_strategy() const noexcept { return tail_strategy_; }

    /// Linear in x at the nearest time node of the piece containing t.
    double value(double t, double x) const;
    double control(double t, double x) const override;

private:
    double tau_;
    double delta_;
    ValueField head_value_;
    StrategyTable head_strategy_;
    ValueField tail_value_;
    StrategyTable tail_strategy_;
};

GluedSolution glue(const EquilibriumSolution& eq, const TailSolution& tail, double tau, double delta);

/// Cost-to-go of the rho-self under the glued head strategy (or `strategy` when given, on the same
/// grid): linear backward sweep on [rho, seam] with weight lambda(t - rho) and the seam values as
/// terminal. rho must be a node of the head grid.
ValueField evaluate_strategy_value(const ProblemSpec& p, const DiscountSpec& d, const GluedSolution& glued,
                                   double rho, const StrategyTable* strategy = nullptr);

}  // namespace equihor

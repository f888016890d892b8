#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "equihor/model.hpp"
#include "equihor/pde.hpp"

namespace equihor {

// g(rho, s, x, u, y); z-free.
using RecursiveGenerator = std::function<double(double rho, double s, double x, double u, double y)>;

/// Recursive cost whose generator reduces to -delta y + g0 once s - rho >= T0.
struct RecursiveCostSpec {
    RecursiveGenerator generator;
    Coefficient tail_generator;
    double delta = 0.0;
    double T0 = 0.0;
    // Envelope phi with |g0| <= phi, and sup of |g0| (used to truncate the tail).
    TimeMap envelope;
    double cost_sup = 0.0;

    /// Head generator -head_rate y + g0, tail generator -delta y + g0, with g0 from the problem.
    static RecursiveCostSpec catalog(const ProblemSpec& p, double delta, double T0, double head_rate);
};

/// Samples the structural conditions and throws StructuralError on the first failure.
void check_recursive_spec(const RecursiveCostSpec& r, const std::vector<double>& controls,
                          std::size_t sample_budget = 2000, const SampleBox& box = {});

struct RecursiveCost {
    // Y(t0; t0, x) on the spatial grid.
    std::vector<double> anchor_values;
    // theta on [t0, t0 + T0]; empty when T0 = 0.
    std::optional<ValueField> head;
    // Y on [t0 + T0, T*] from the linear discounted evaluation.
    ValueField tail;
};

/// Evaluates the recursive cost of `policy` anchored at t0. `dt` is the outer time step and must
/// divide T0; the tail is truncated once cost_sup exp(-delta (T* - t0 - T0)) / delta <= tol_tail.
RecursiveCost recursive_cost_field(const ProblemSpec& p, const RecursiveCostSpec& r, const FeedbackPolicy& policy,
                                   double t0, const SpaceGrid& space, double dt, double tol_tail);

/// One semilinear sweep of the full generator over [t0, T*] with zero terminal.
ValueField recursive_cost_full(const ProblemSpec& p, const RecursiveCostSpec& r, const FeedbackPolicy& policy,
                               double t0, const SpaceGrid& space, double dt, double tol_tail);

/// State and control sampled on a uniform time step.
struct SamplePath {
    double t0 = 0.0;
    double step = 0.0;
    std::vector<double> x;
    std::vector<double> u;

    std::size_t n_steps() const noexcept { return x.empty() ? 0 : x.size() - 1; }
    double t(std::size_t k) const noexcept { return t0 + step * static_cast<double>(k); }
};

/// |Y(r) - integral_r^H exp(-delta (s - r)) g0 ds| where Y solves dY = (delta Y - g0) ds backward
/// from Y(H) = 0 with H the end of the path. r must be a node of the path.
double tail_reduction_check(const RecursiveCostSpec& r, const SamplePath& path, double r_time);

struct DecompositionReport {
    double sup_residual = 0.0;
    double residual_at_x0 = 0.0;
    double full_at_x0 = 0.0;
    double decomposed_at_x0 = 0.0;
};

/// Full-window semilinear evaluation against head evaluation with the discounted tail as terminal.
DecompositionReport decomposition_check(const ProblemSpec& p, const RecursiveCostSpec& r, const FeedbackPolicy& policy,
                                        double t0, double x0, const SpaceGrid& space, double dt, double tol_tail);

}  // namespace equihor

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "equihor/classical.hpp"
#include "equihor/equilibrium.hpp"
#include "equihor/model.hpp"
#include "equihor/pde.hpp"

namespace equihor {

/// Paths leaving [lo, hi] are flagged and frozen.
struct GuardBox {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

/// [x_min - 2, x_max + 2].
GuardBox guard_for(const SpaceGrid& space);

/// Euler-Maruyama paths on the nodes t0 + k step, k = 0..n_steps. Controls are stored at every
/// node; the one at node k drives the step to k + 1.
class PathBatch {
public:
    PathBatch(std::uint64_t seed, double t0, double step, std::size_t n_steps, std::size_t n_paths);

    std::uint64_t seed() const noexcept { return seed_; }
    double t0() const noexcept { return t0_; }
    double step() const noexcept { return step_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t n_paths() const noexcept { return n_paths_; }
    double t(std::size_t k) const noexcept { return t0_ + step_ * static_cast<double>(k); }
    double horizon() const noexcept { return t(n_steps_); }

    double& x(std::size_t path, std::size_t k) noexcept { return states_[path * (n_steps_ + 1) + k]; }
    double x(std::size_t path, std::size_t k) const noexcept { return states_[path * (n_steps_ + 1) + k]; }
    double& u(std::size_t path, std::size_t k) noexcept { return controls_[path * (n_steps_ + 1) + k]; }
    double u(std::size_t path, std::size_t k) const noexcept { return controls_[path * (n_steps_ + 1) + k]; }

    bool flagged(std::size_t path) const noexcept { return flags_[path] != 0; }
    void flag(std::size_t path) noexcept { flags_[path] = 1; }
    std::size_t flag_count() const noexcept;

    const std::vector<double>& states() const noexcept { return states_; }
    const std::vector<double>& controls() const noexcept { return controls_; }

    /// Node index of time t; throws DomainError when t is not a node.
    std::size_t node(double t) const;

private:
    std::uint64_t seed_;
    double t0_;
    double step_;
    std::size_t n_steps_;
    std::size_t n_paths_;
    std::vector<double> states_;
    std::vector<double> controls_;
    std::vector<std::uint8_t> flags_;
};

PathBatch simulate_feedback(const ProblemSpec& p, const FeedbackPolicy& policy, double t0, double x0, double step,
                            double horizon, std::size_t n_paths, std::uint64_t seed, const GuardBox& guard = {});

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_used = 0;
    std::size_t n_flagged = 0;
};

/// Per-path trapezoid of lambda(s - rho) g0(s, X, u) over [rho, horizon] plus
/// terminal_factor * terminal(X(horizon)). Flagged paths are excluded; a flag fraction of 1% or
/// more raises GuardError.
McEstimate mc_cost(const PathBatch& batch, const DiscountSpec& d, double rho, const Coefficient& g0,
                   const TerminalFn& terminal = {}, double terminal_factor = 1.0);

/// Order-independent sum by recursive halving.
double pairwise_sum(std::span<const double> values) noexcept;

struct Revision {
    double time = 0.0;
    // sup_x |plan of the previous revision at this time - new plan|; zero for the first plan.
    double deviation = 0.0;
};

struct NaiveReport {
    std::vector<Revision> revisions;
    McEstimate cost;
    std::size_t plans() const noexcept { return revisions.size(); }
    double max_deviation() const noexcept;
};

struct NaiveSettings {
    SpaceGrid space;
    double tol_tail = 1e-4;
};

/// Re-solves the pre-committed problem every revision_interval on [t0, t0 + T0] and plays each
/// plan until the next revision. The reported cost is the t0-self functional of the played path.
NaiveReport naive_agent(const ProblemSpec& p, const DiscountSpec& d, double t0, double x0, double revision_interval,
                        double step, std::size_t n_paths, std::uint64_t seed, const NaiveSettings& settings);

/// Cost at the t_spike-self of playing u_alt on (t_spike, t_spike + eps] instead of the glued head
/// strategy, minus the cost of the glued strategy; one entry per spatial node.
std::vector<double> spike_cost(const ProblemSpec& p, const DiscountSpec& d, const GluedSolution& glued,
                               double t_spike, std::span<const double> u_alt, double eps);
std::vector<double> spike_cost(const ProblemSpec& p, const DiscountSpec& d, const GluedSolution& glued,
                               double t_spike, double u_alt, double eps);

}  // namespace equihor

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace equihor {

// Coefficient of the state equation or a running cost: (s, x, u) -> value.
using Coefficient = std::function<double(double s, double x, double u)>;

// Anchor-dependent running cost g(rho, s, x, u).
using TwoTimeCost = std::function<double(double rho, double s, double x, double u)>;

// Running cost rate already combined with its weight: (t, x, u) -> rate.
using CostRate = std::function<double(double t, double x, double u)>;

using TimeMap = std::function<double(double)>;

/// Discount function that becomes exponential after a finite time:
/// lambda(tau) = head(tau) on [0, T0) and exp(-delta * tau) for tau >= T0.
class DiscountSpec {
public:
    enum class Kind { exponential, matched_hyperbolic, custom };

    /// head(tau) = exp(-delta * tau); time-consistent for every T0.
    static DiscountSpec exponential(double delta, double T0);

    /// head(tau) = 1 / (1 + k tau) with k chosen so that head(T0) = exp(-delta T0).
    static DiscountSpec matched_hyperbolic(double delta, double T0);

    /// Arbitrary head segment; the splice is not enforced (see validate_problem).
    static DiscountSpec custom(double delta, double T0, TimeMap head);

    Kind kind() const noexcept { return kind_; }
    double delta() const noexcept { return delta_; }
    double T0() const noexcept { return T0_; }
    // Hyperbolic rate k; zero for other kinds.
    double hyperbolic_rate() const noexcept { return k_; }
    double head(double tau) const;

    double operator()(double tau) const;

private:
    DiscountSpec(Kind kind, double delta, double T0, double k, TimeMap head);

    Kind kind_;
    double delta_;
    double T0_;
    double k_;
    TimeMap head_;
};

/// Evaluates lambda(tau). Throws DomainError for tau < 0.
double discount_eval(const DiscountSpec& d, double tau);

/// A controlled scalar diffusion with bounded nonnegative running cost.
struct ProblemSpec {
    Coefficient drift;
    Coefficient diffusion;
    // g0(s, x, u), the one-time running cost.
    Coefficient base_cost;
    // Optional g(rho, s, x, u). When empty the product form lambda(s - rho) g0 is used.
    TwoTimeCost two_time_cost;
    // Envelope phi(s) with 0 <= g0 <= phi.
    TimeMap cost_bound;
    // Closed form T -> integral of phi over [T, inf). Empty when unavailable.
    TimeMap cost_tail;
    // Upper bound on g0 over all arguments.
    double cost_sup = 0.0;
    // Strictly ascending finite control set.
    std::vector<double> controls;
    double epsilon = 0.0;
    std::string name;
};

/// Parameters of the built-in problem family
///   b = beta0 + beta1 tanh(x) + beta2 u,   sigma = sigma0 + sigma1 tanh(x),
///   g0 = exp(-rho s) (a tanh^2(x - x_star) + c (u / u_max)^2).
struct CatalogParams {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 1.0;
    double sigma0 = 1.0;
    double sigma1 = 0.0;
    double a = 1.0;
    double c = 0.5;
    double rho = 0.5;
    double x_star = 0.0;
    double u_max = 1.0;
    std::size_t n_controls = 5;
    double epsilon = 0.25;
};

ProblemSpec catalog_problem(const CatalogParams& params);

/// n equally spaced controls on [-u_max, u_max]; the midpoint is exactly 0 for odd n.
std::vector<double> symmetric_controls(double u_max, std::size_t n);

/// g(rho, s, x, u): the two-time hook when present, else lambda(s - rho) g0(s, x, u).
double running_cost(const ProblemSpec& p, const DiscountSpec& d, double rho, double s, double x,
                    double u);

/// grad b + sigma^2 hess / 2 + weight g0. Throws DomainError when u is not on the control grid.
double hamiltonian(const ProblemSpec& p, double t, double x, double u, double grad, double hess,
                   double weight);

/// One-sided differences; the Hamiltonian picks forward where b >= 0, backward otherwise.
struct UpwindGradient {
    double forward;
    double backward;
};

/// Control minimizing the Hamiltonian over the grid; ties go to the smallest control.
double argmin_control(const ProblemSpec& p, double t, double x, double grad, double hess,
                      double weight);
double argmin_control(const ProblemSpec& p, double t, double x, UpwindGradient grad, double hess,
                      double weight);
double argmin_control(const ProblemSpec& p, double t, double x, UpwindGradient grad, double hess,
                      const CostRate& cost);

/// Integral of the cost envelope over [T, inf).
double tail_bound(const ProblemSpec& p, double T);

struct Violation {
    enum class Kind {
        control_grid,
        non_degeneracy,
        cost_range,
        discount_origin,
        discount_monotone,
        splice,
        tail_map,
        two_time_tail,
    };
    Kind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(Violation::Kind kind) const noexcept;
};

/// Region sampled by validate_problem.
struct SampleBox {
    double s_max = 20.0;
    double x_min = -5.0;
    double x_max = 5.0;
    std::uint64_t seed = 0x5eed;
};

/// Samples (s, x, u) points and reports every structural violation found.
ValidationReport validate_problem(const ProblemSpec& p, const DiscountSpec& d,
                                  std::size_t sample_budget, const SampleBox& box = {});

std::string to_string(Violation::Kind kind);

}  // namespace equihor

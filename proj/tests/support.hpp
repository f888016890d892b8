#pragma once

// Small problem builders shared by the unit tests.

#include <cmath>
#include <vector>

#include "equihor/model.hpp"
#include "equihor/pde.hpp"

namespace equihor::testing {

// b = beta u, sigma = const, g0 = cost(s); everything else trivial.
inline ProblemSpec simple_problem(double sigma, double beta, TimeMap cost, double cost_sup,
                                  std::vector<double> controls = symmetric_controls(1.0, 5)) {
    ProblemSpec p;
    p.drift = [beta](double, double, double u) { return beta * u; };
    p.diffusion = [sigma](double, double, double) { return sigma; };
    p.base_cost = [c = cost](double s, double, double) { return c(s); };
    p.cost_bound = cost;
    p.cost_sup = cost_sup;
    p.controls = std::move(controls);
    p.epsilon = 0.5 * sigma * sigma;
    p.name = "simple";
    return p;
}

inline ProblemSpec constant_cost(double c, double sigma = 1.0, double beta = 1.0) {
    auto p = simple_problem(sigma, beta, [c](double) { return c; }, c);
    p.cost_tail = {};
    return p;
}

inline ProblemSpec exp_cost(double rho, double sigma = 1.0, double beta = 1.0) {
    auto p = simple_problem(sigma, beta, [rho](double s) { return std::exp(-rho * s); }, 1.0);
    p.cost_tail = [rho](double T) { return std::exp(-rho * T) / rho; };
    return p;
}

// Mean-reverting catalog variant used wherever paths are simulated over long horizons.
inline CatalogParams confined_catalog() {
    CatalogParams q;
    q.beta0 = 0.2;
    q.beta1 = -1.0;
    q.x_star = 0.3;
    return q;
}

inline double sup_abs(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace equihor::testing

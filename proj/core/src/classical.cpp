#include "equihor/classical.hpp"

#include <algorithm>
#include <cmath>

#include "equihor/errors.hpp"

namespace equihor {

namespace {

std::size_t steps_for(double length, double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    // Guard against ceil(3.0000000000000004).
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / dt - 1e-9)));
}

}  // namespace

Solution solve_backward(const ProblemSpec& p, const Grid1D& grid, const CostRate& cost,
                        std::span<const double> terminal) {
    if (terminal.size() != grid.n_x()) throw DomainError("terminal slice does not match the grid");
    for (double v : terminal) {
        if (!std::isfinite(v)) throw DomainError("terminal values must be finite");
    }
    const BackwardStepper stepper(p, grid);
    Solution sol{ValueField(grid), StrategyTable(grid), stepper.substeps()};
    const std::size_t N = grid.n_t();
    std::copy(terminal.begin(), terminal.end(), sol.value.row(N).begin());
    for (std::size_t k = N; k-- > 0;) {
        auto step = stepper.hjb(sol.value.row(k + 1), grid.t(k), cost);
        std::copy(step.values.begin(), step.values.end(), sol.value.row(k).begin());
    }
    for (std::size_t k = 0; k <= N; ++k) {
        const auto u = stepper.feedback(sol.value.row(k), grid.t(k), cost);
        std::copy(u.begin(), u.end(), sol.strategy.row(k).begin());
    }
    return sol;
}

Solution solve_finite_horizon(const ProblemSpec& p, const Grid1D& grid, const WeightFn& weight,
                              const TerminalFn& terminal) {
    std::vector<double> term(grid.n_x());
    for (std::size_t i = 0; i < term.size(); ++i) term[i] = terminal(grid.x(i));
    return solve_backward(p, grid, weighted_cost(p, weight), term);
}

double truncation_horizon(const ProblemSpec& p, double tol, double t_min, double dt) {
    if (!(tol > 0.0)) throw DomainError("tail tolerance must be positive");
    const double start = std::max(0.0, t_min);
    double hi = std::max(start, 1.0);
    int guard = 0;
    while (tail_bound(p, hi) > tol) {
        hi *= 2.0;
        if (++guard > 60) throw UnsupportedProblem("tail integral does not fall below tolerance");
    }
    double lo = start;
    if (tail_bound(p, lo) <= tol) {
        hi = lo;
    } else {
        for (int it = 0; it < 200 && hi - lo > 1e-9 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (tail_bound(p, mid) <= tol ? hi : lo) = mid;
        }
    }
    const std::size_t n = steps_for(std::max(hi - t_min, dt), dt);
    return t_min + dt * static_cast<double>(n);
}

ValueField restrict_rows(const ValueField& field, std::size_t k0, std::size_t k1) {
    const Grid1D& g = field.grid();
    if (!(k0 < k1 && k1 <= g.n_t())) throw DomainError("invalid row range");
    ValueField out(Grid1D(g.space(), g.t(k0), g.t(k1), k1 - k0));
    for (std::size_t k = k0; k <= k1; ++k) {
        std::copy(field.row(k).begin(), field.row(k).end(), out.row(k - k0).begin());
    }
    return out;
}

StrategyTable restrict_rows(const StrategyTable& table, std::size_t k0, std::size_t k1) {
    const Grid1D& g = table.grid();
    if (!(k0 < k1 && k1 <= g.n_t())) throw DomainError("invalid row range");
    StrategyTable out(Grid1D(g.space(), g.t(k0), g.t(k1), k1 - k0));
    for (std::size_t k = k0; k <= k1; ++k) {
        std::copy(table.row(k).begin(), table.row(k).end(), out.row(k - k0).begin());
    }
    return out;
}

InfiniteHorizonResult solve_infinite_horizon(const ProblemSpec& p, const SpaceGrid& space, double t_window,
                                             double tol_tail, double dt) {
    if (!(t_window > 0.0)) throw DomainError("reporting window must be positive");
    const double T = truncation_horizon(p, tol_tail, t_window, dt);
    const std::size_t n = steps_for(T, dt);
    const double step = T / static_cast<double>(n);

    const auto unit = [](double, double) { return 1.0; };
    const auto zero = [](double) { return 0.0; };
    auto single = solve_finite_horizon(p, Grid1D(space, 0.0, T, n), unit, zero);
    auto twice = solve_finite_horizon(p, Grid1D(space, 0.0, 2.0 * T, 2 * n), unit, zero);

    const std::size_t k_hat = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(t_window / step)), 1, n);
    InfiniteHorizonResult out{T,
                              tail_bound(p, T),
                              restrict_rows(single.value, 0, k_hat),
                              single.value,
                              restrict_rows(twice.value, 0, n),
                              restrict_rows(single.strategy, 0, k_hat)};
    return out;
}

TailSolution solve_discounted_tail(const ProblemSpec& p, double delta, double t_anchor, const SpaceGrid& space,
                                   double tol_tail, double dt, double min_horizon) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (!(tol_tail > 0.0)) throw DomainError("tail tolerance must be positive");
    if (!(t_anchor >= 0.0)) throw DomainError("anchor must be nonnegative");
    double horizon = std::max(t_anchor + dt, min_horizon);
    if (p.cost_sup > 0.0) {
        horizon = std::max(horizon, std::log(p.cost_sup / (delta * tol_tail)) / delta);
    }
    const std::size_t n = steps_for(horizon - t_anchor, dt);
    horizon = t_anchor + dt * static_cast<double>(n);

    const Grid1D grid(space, t_anchor, horizon, n);
    const std::vector<double> zero(space.n_x, 0.0);
    auto sol = solve_backward(p, grid,
                              time_weighted_cost(p, [delta](double t) { return std::exp(-delta * t); }), zero);
    return TailSolution{delta, t_anchor, horizon, std::move(sol.value), std::move(sol.strategy)};
}

Solution precommit_value(const ProblemSpec& p, const DiscountSpec& d, double t0, double t1,
                         std::span<const double> terminal, const SpaceGrid& space, std::size_t n_t) {
    if (!(t0 < t1)) throw DomainError("pre-committed window needs t0 < t1");
    const CostRate cost = [&p, &d, t0](double t, double x, double u) { return running_cost(p, d, t0, t, x, u); };
    return solve_backward(p, Grid1D(space, t0, t1, n_t), cost, terminal);
}

ProblemSpec shifted_problem(const ProblemSpec& p, double shift) {
    ProblemSpec q = p;
    q.drift = [f = p.drift, shift](double s, double x, double u) { return f(s + shift, x, u); };
    q.diffusion = [f = p.diffusion, shift](double s, double x, double u) { return f(s + shift, x, u); };
    q.base_cost = [f = p.base_cost, shift](double s, double x, double u) { return f(s + shift, x, u); };
    if (p.two_time_cost) {
        q.two_time_cost = [f = p.two_time_cost, shift](double r, double s, double x, double u) {
            return f(r + shift, s + shift, x, u);
        };
    }
    if (p.cost_bound) q.cost_bound = [f = p.cost_bound, shift](double s) { return f(s + shift); };
    if (p.cost_tail) q.cost_tail = [f = p.cost_tail, shift](double T) { return f(T + shift); };
    q.name = p.name + "+shift";
    return q;
}

double shift_equivalence_check(const ProblemSpec& p, const DiscountSpec& d, double t_shift,
                               const SpaceGrid& space, double window, std::size_t n_t) {
    if (!(t_shift >= 0.0)) throw DomainError("shift must be nonnegative");
    const std::vector<double> zero(space.n_x, 0.0);
    const auto anchored = precommit_value(p, d, t_shift, t_shift + window, zero, space, n_t);
    const ProblemSpec q = shifted_problem(p, t_shift);
    const auto shifted = precommit_value(q, d, 0.0, window, zero, space, n_t);
    double worst = 0.0;
    const auto& a = anchored.value.values();
    const auto& b = shifted.value.values();
    for (std::size_t n = 0; n < a.size(); ++n) worst = std::max(worst, std::abs(a[n] - b[n]));
    return worst;
}

}  // namespace equihor

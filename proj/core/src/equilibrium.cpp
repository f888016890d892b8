#include "equihor/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "equihor/errors.hpp"

namespace equihor {

BiTimeField::BiTimeField(double tau, Grid1D grid)
    : tau_(tau), grid_(std::move(grid)) {
    const std::size_t N = grid_.n_t();
    values_.assign((N + 1) * (N + 2) / 2 * grid_.n_x(), 0.0);
}

std::size_t BiTimeField::offset(std::size_t j, std::size_t k) const {
    const std::size_t N = grid_.n_t();
    if (j > k || k > N) throw DomainError("bi-time index requires rho_j <= t_k");
    // Slice j' holds N - j' + 1 rows.
    const std::size_t rows_before = j * (N + 1) - (j * (j - 1)) / 2;
    return (rows_before + (k - j)) * grid_.n_x();
}

std::span<double> BiTimeField::slice(std::size_t j, std::size_t k) {
    return {values_.data() + offset(j, k), grid_.n_x()};
}

std::span<const double> BiTimeField::slice(std::size_t j, std::size_t k) const {
    return {values_.data() + offset(j, k), grid_.n_x()};
}

ValueField BiTimeField::slice_field(std::size_t j) const {
    const std::size_t N = grid_.n_t();
    if (j >= N) throw DomainError("slice needs at least one step");
    ValueField out(Grid1D(grid_.space(), grid_.t(j), grid_.t(N), N - j));
    for (std::size_t k = j; k <= N; ++k) {
        const auto s = slice(j, k);
        std::copy(s.begin(), s.end(), out.row(k - j).begin());
    }
    return out;
}

ValueField BiTimeField::diagonal_field() const {
    ValueField out(grid_);
    for (std::size_t k = 0; k <= grid_.n_t(); ++k) {
        const auto s = diagonal(k);
        std::copy(s.begin(), s.end(), out.row(k).begin());
    }
    return out;
}

namespace {

std::size_t seam_row(const ValueField& tail, double seam) {
    try {
        return tail.grid().time_index(seam);
    } catch (const DomainError&) {
        throw CompositionError("tail field has no time node at the regime boundary");
    }
}

CostRate anchored_cost(const ProblemSpec& p, const DiscountSpec& d, double rho) {
    return [&p, &d, rho](double t, double x, double u) { return running_cost(p, d, rho, t, x, u); };
}

}  // namespace

EquilibriumSolution solve_equilibrium_system(const ProblemSpec& p, const DiscountSpec& d, double tau,
                                             const SpaceGrid& space, std::size_t n_t, const TailSolution& tail) {
    if (!(d.T0() > 0.0)) throw DomainError("equilibrium window needs T0 > 0");
    if (!(tau >= 0.0)) throw DomainError("anchor must be nonnegative");
    const double seam = tau + d.T0();
    if (!(tail.value.grid().space() == space)) throw CompositionError("tail field lives on another spatial grid");
    const std::size_t k_tail = seam_row(tail.value, seam);

    const Grid1D grid(space, tau, seam, n_t);
    const std::size_t N = n_t;
    EquilibriumSolution sol{BiTimeField(tau, grid), StrategyTable(grid), 1};
    const BackwardStepper stepper(p, grid);
    sol.substeps = stepper.substeps();

    const double scale = std::exp(d.delta() * tau);
    const auto terminal = tail.value.row(k_tail);
    for (std::size_t j = 0; j <= N; ++j) {
        auto s = sol.theta.slice(j, N);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = scale * terminal[i];
    }

    std::vector<CostRate> cost(N + 1);
    for (std::size_t j = 0; j <= N; ++j) cost[j] = anchored_cost(p, d, grid.t(j));

    for (std::size_t k = N; k >= 1; --k) {
        const auto u = stepper.feedback(sol.theta.diagonal(k), grid.t(k), cost[k]);
        std::copy(u.begin(), u.end(), sol.strategy.row(k).begin());
        for (std::size_t j = 0; j < k; ++j) {
            const auto next = stepper.linear(sol.theta.slice(j, k), grid.t(k - 1), u, cost[j]);
            std::copy(next.begin(), next.end(), sol.theta.slice(j, k - 1).begin());
        }
    }
    const auto u0 = stepper.feedback(sol.theta.diagonal(0), grid.t(0), cost[0]);
    std::copy(u0.begin(), u0.end(), sol.strategy.row(0).begin());
    return sol;
}

GluedSolution::GluedSolution(double tau, double delta, ValueField head_value, StrategyTable head_strategy,
                             ValueField tail_value, StrategyTable tail_strategy)
    : tau_(tau),
      delta_(delta),
      head_value_(std::move(head_value)),
      head_strategy_(std::move(head_strategy)),
      tail_value_(std::move(tail_value)),
      tail_strategy_(std::move(tail_strategy)) {
    if (!head_value_.grid().same_space(tail_value_.grid()) || !head_value_.grid().same_space(head_strategy_.grid()) ||
        !tail_value_.grid().same_space(tail_strategy_.grid())) {
        throw CompositionError("glued pieces live on different spatial grids");
    }
}

double GluedSolution::value(double t, double x) const {
    if (t < seam()) {
        return head_value_.interpolate(head_value_.grid().nearest_time(t), x);
    }
    return tail_value_.interpolate(tail_value_.grid().nearest_time(t), x);
}

double GluedSolution::control(double t, double x) const {
    if (t < seam()) return head_strategy_.lookup(t, x);
    return tail_strategy_.lookup(t, x);
}

GluedSolution glue(const EquilibriumSolution& eq, const TailSolution& tail, double tau, double delta) {
    const Grid1D& g = eq.theta.grid();
    if (!g.same_space(tail.value.grid()) || !g.same_space(tail.strategy.grid())) {
        throw CompositionError("equilibrium and tail fields live on different spatial grids");
    }
    if (std::abs(eq.theta.anchor() - tau) > 1e-12 * std::max(1.0, std::abs(tau))) {
        throw CompositionError("equilibrium field is anchored at " + std::to_string(eq.theta.anchor()));
    }
    const std::size_t k0 = seam_row(tail.value, g.t_end());
    const std::size_t K = tail.value.grid().n_t();
    if (k0 >= K) throw CompositionError("tail field ends at the regime boundary");

    const double scale = std::exp(delta * tau);
    ValueField tail_value = restrict_rows(tail.value, k0, K);
    for (std::size_t k = 0; k <= K - k0; ++k) {
        const auto src = tail.value.row(k0 + k);
        auto dst = tail_value.row(k);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = scale * src[i];
    }
    return GluedSolution(tau, delta, eq.theta.diagonal_field(), eq.strategy, std::move(tail_value),
                         restrict_rows(tail.strategy, k0, K));
}

ValueField evaluate_strategy_value(const ProblemSpec& p, const DiscountSpec& d, const GluedSolution& glued,
                                   double rho, const StrategyTable* strategy) {
    const Grid1D& g = glued.head_value().grid();
    const StrategyTable& table = strategy ? *strategy : glued.head_strategy();
    if (!(table.grid().space() == g.space()) || table.grid().n_t() != g.n_t()) {
        throw CompositionError("strategy table does not match the equilibrium grid");
    }
    const std::size_t j = g.time_index(rho);
    const std::size_t N = g.n_t();
    if (j >= N) throw DomainError("anchor must lie before the regime boundary");

    const BackwardStepper stepper(p, g);
    const CostRate cost = anchored_cost(p, d, g.t(j));
    ValueField out(Grid1D(g.space(), g.t(j), g.t(N), N - j));
    const auto terminal = glued.head_value().row(N);
    std::copy(terminal.begin(), terminal.end(), out.row(N - j).begin());
    for (std::size_t k = N; k > j; --k) {
        const auto next = stepper.linear(out.row(k - j), g.t(k - 1), table.row(k), cost);
        std::copy(next.begin(), next.end(), out.row(k - 1 - j).begin());
    }
    return out;
}

}  // namespace equihor

#include "equihor/recursive.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "equihor/errors.hpp"

namespace equihor {

RecursiveCostSpec RecursiveCostSpec::catalog(const ProblemSpec& p, double delta, double T0, double head_rate) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (!(T0 >= 0.0)) throw DomainError("T0 must be nonnegative");
    RecursiveCostSpec r;
    r.tail_generator = p.base_cost;
    r.delta = delta;
    r.T0 = T0;
    r.envelope = p.cost_bound;
    r.cost_sup = p.cost_sup;
    // The slack keeps s - rho == T0 (up to rounding of rho + T0 - rho) on the tail branch.
    const double cut = T0 - 1e-12 * std::max(1.0, T0);
    r.generator = [g0 = p.base_cost, delta, head_rate, cut](double rho, double s, double x, double u, double y) {
        const double rate = (s - rho) < cut ? head_rate : delta;
        return -rate * y + g0(s, x, u);
    };
    return r;
}

void check_recursive_spec(const RecursiveCostSpec& r, const std::vector<double>& controls,
                          std::size_t sample_budget, const SampleBox& box) {
    if (!r.generator || !r.tail_generator) throw StructuralError("recursive spec is missing a generator");
    if (!(r.delta > 0.0) || !(r.T0 >= 0.0)) throw StructuralError("recursive spec needs delta > 0 and T0 >= 0");
    if (controls.empty()) throw StructuralError("empty control grid");
    std::mt19937_64 gen(box.seed);
    std::uniform_real_distribution<double> time(0.0, box.s_max);
    std::uniform_real_distribution<double> space(box.x_min, box.x_max);
    std::uniform_real_distribution<double> level(-10.0, 10.0);
    std::uniform_int_distribution<std::size_t> pick(0, controls.size() - 1);
    for (std::size_t n = 0; n < sample_budget; ++n) {
        const double rho = time(gen);
        const double s = rho + r.T0 + time(gen);
        const double x = space(gen);
        const double u = controls[pick(gen)];
        const double y = level(gen);
        const double g0 = r.tail_generator(s, x, u);
        const double gap = std::abs(r.generator(rho, s, x, u, y) - (-r.delta * y + g0));
        if (!(gap <= 1e-10)) {
            std::ostringstream msg;
            msg << "generator differs from -delta y + g0 by " << gap << " at rho=" << rho << " s=" << s
                << " x=" << x << " u=" << u << " y=" << y;
            throw StructuralError(msg.str());
        }
        if (r.envelope && !(std::abs(g0) <= r.envelope(s) + 1e-12)) {
            std::ostringstream msg;
            msg << "|g0| exceeds the envelope at s=" << s << " x=" << x << " u=" << u;
            throw StructuralError(msg.str());
        }
    }
}

namespace {

struct Layout {
    std::size_t head_steps;
    std::size_t tail_steps;
    double seam;
    double horizon;
};

Layout layout(const RecursiveCostSpec& r, double t0, double dt, double tol_tail) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (!(tol_tail > 0.0)) throw DomainError("tail tolerance must be positive");
    if (!(r.delta > 0.0)) throw DomainError("delta must be positive");
    const double ratio = r.T0 / dt;
    const auto head = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(head)) > 1e-9 * std::max(1.0, ratio)) {
        throw DomainError("time step must divide T0");
    }
    double length = dt;
    if (r.cost_sup > 0.0) length = std::max(length, std::log(r.cost_sup / (r.delta * tol_tail)) / r.delta);
    const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / dt - 1e-9)));
    const double seam = t0 + r.T0;
    return {head, tail, seam, seam + dt * static_cast<double>(tail)};
}

Generator anchored(const RecursiveCostSpec& r, double t0) {
    return [&r, t0](double t, double x, double u, double y) { return r.generator(t0, t, x, u, y); };
}

}  // namespace

RecursiveCost recursive_cost_field(const ProblemSpec& p, const RecursiveCostSpec& r, const FeedbackPolicy& policy,
                                   double t0, const SpaceGrid& space, double dt, double tol_tail) {
    check_recursive_spec(r, p.controls);
    const Layout L = layout(r, t0, dt, tol_tail);

    // W = exp(delta r) V_r on the tail, i.e. the discounted evaluation weighted from the seam.
    const Grid1D tail_grid(space, L.seam, L.horizon, L.tail_steps);
    const StrategyTable tail_controls = tabulate(policy, tail_grid);
    // Under a fixed control Y = exp(delta (t - r)) W is exact before time stepping, so the two routes
    // differ only by the time integrator; Heun makes that difference second order.
    const BackwardStepper tail_stepper(p, tail_grid, TimeScheme::heun);
    const double delta = r.delta;
    const double seam = L.seam;
    const CostRate tail_cost = [&r, delta, seam](double t, double x, double u) {
        return std::exp(-delta * (t - seam)) * r.tail_generator(t, x, u);
    };
    ValueField w(tail_grid);
    for (std::size_t k = L.tail_steps; k-- > 0;) {
        const auto next = tail_stepper.linear(w.row(k + 1), tail_grid.t(k), tail_controls.row(k + 1), tail_cost);
        std::copy(next.begin(), next.end(), w.row(k).begin());
    }
    ValueField tail(tail_grid);
    for (std::size_t k = 0; k <= L.tail_steps; ++k) {
        const double scale = std::exp(delta * (tail_grid.t(k) - seam));
        for (std::size_t i = 0; i < space.n_x; ++i) tail.at(k, i) = scale * w.at(k, i);
    }

    RecursiveCost out{std::vector<double>(w.row(0).begin(), w.row(0).end()), std::nullopt, std::move(tail)};
    if (L.head_steps == 0) return out;

    const Grid1D head_grid(space, t0, L.seam, L.head_steps);
    const StrategyTable head_controls = tabulate(policy, head_grid);
    const BackwardStepper head_stepper(p, head_grid, TimeScheme::heun);
    const Generator gen = anchored(r, t0);
    ValueField theta(head_grid);
    std::copy(out.anchor_values.begin(), out.anchor_values.end(), theta.row(L.head_steps).begin());
    for (std::size_t k = L.head_steps; k-- > 0;) {
        const auto next = head_stepper.semilinear(theta.row(k + 1), head_grid.t(k), head_controls.row(k + 1), gen);
        std::copy(next.begin(), next.end(), theta.row(k).begin());
    }
    out.anchor_values.assign(theta.row(0).begin(), theta.row(0).end());
    out.head = std::move(theta);
    return out;
}

ValueField recursive_cost_full(const ProblemSpec& p, const RecursiveCostSpec& r, const FeedbackPolicy& policy,
                               double t0, const SpaceGrid& space, double dt, double tol_tail) {
    check_recursive_spec(r, p.controls);
    const Layout L = layout(r, t0, dt, tol_tail);
    const std::size_t n = L.head_steps + L.tail_steps;
    const Grid1D grid(space, t0, L.horizon, n);
    const StrategyTable controls = tabulate(policy, grid);
    const BackwardStepper stepper(p, grid, TimeScheme::heun);
    const Generator gen = anchored(r, t0);
    ValueField y(grid);
    for (std::size_t k = n; k-- > 0;) {
        const auto next = stepper.semilinear(y.row(k + 1), grid.t(k), controls.row(k + 1), gen);
        std::copy(next.begin(), next.end(), y.row(k).begin());
    }
    return y;
}

double tail_reduction_check(const RecursiveCostSpec& r, const SamplePath& path, double r_time) {
    if (path.x.size() != path.u.size() || path.x.size() < 2) throw DomainError("path needs matching x and u samples");
    if (!(path.step > 0.0)) throw DomainError("path step must be positive");
    const double pos = (r_time - path.t0) / path.step;
    const auto kr = static_cast<std::size_t>(std::llround(pos));
    if (pos < -1e-9 || std::abs(pos - static_cast<double>(kr)) > 1e-9 * std::max(1.0, pos)) {
        throw DomainError("r must be a node of the path");
    }
    const std::size_t K = path.n_steps();
    if (kr > K) throw DomainError("r lies beyond the path");
    if (kr == K) return 0.0;

    const double h = path.step;
    const double delta = r.delta;
    const auto g0 = [&](std::size_t k) { return r.tail_generator(path.t(k), path.x[k], path.u[k]); };
    const auto f = [&](std::size_t k, double y) { return delta * y - g0(k); };

    // Pairs of steps are processed from the top; an odd count leaves one step at r.
    const std::size_t n = K - kr;
    const std::size_t first = kr + (n % 2);

    // Backward RK4 with step 2h on pairs, mid-pair sample as the half-step node.
    double y = 0.0;
    for (std::size_t b = K; b > first; b -= 2) {
        const double H = 2.0 * h;
        const double k1 = f(b, y);
        const double k2 = f(b - 1, y - 0.5 * H * k1);
        const double k3 = f(b - 1, y - 0.5 * H * k2);
        const double k4 = f(b - 2, y - H * k3);
        y -= H / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (first != kr) {
        const double k1 = f(first, y);
        const double k2 = f(kr, y - h * k1);
        y -= 0.5 * h * (k1 + k2);
    }

    // Direct quadrature of the variation-of-constants integral.
    const auto q = [&](std::size_t k) {
        return std::exp(-delta * h * static_cast<double>(k - kr)) * g0(k);
    };
    double integral = 0.0;
    for (std::size_t a = first; a < K; a += 2) integral += h / 3.0 * (q(a) + 4.0 * q(a + 1) + q(a + 2));
    if (first != kr) integral += 0.5 * h * (q(kr) + q(first));

    return std::abs(y - integral);
}

DecompositionReport decomposition_check(const ProblemSpec& p, const RecursiveCostSpec& r, const FeedbackPolicy& policy,
                                        double t0, double x0, const SpaceGrid& space, double dt, double tol_tail) {
    const auto decomposed = recursive_cost_field(p, r, policy, t0, space, dt, tol_tail);
    const auto full = recursive_cost_full(p, r, policy, t0, space, dt, tol_tail);
    DecompositionReport rep;
    const auto row = full.row(0);
    for (std::size_t i = 0; i < space.n_x; ++i) {
        rep.sup_residual = std::max(rep.sup_residual, std::abs(row[i] - decomposed.anchor_values[i]));
    }
    rep.full_at_x0 = full.interpolate(0, x0);
    rep.decomposed_at_x0 = interpolate_row(decomposed.anchor_values, space, x0);
    rep.residual_at_x0 = std::abs(rep.full_at_x0 - rep.decomposed_at_x0);
    return rep;
}

}  // namespace equihor

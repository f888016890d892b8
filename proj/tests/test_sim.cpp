#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "doctest.h"
#include "equihor/classical.hpp"
#include "equihor/equilibrium.hpp"
#include "equihor/errors.hpp"
#include "equihor/refinement.hpp"
#include "equihor/sim.hpp"
#include "lattice_oracle.hpp"
#include "support.hpp"

using namespace equihor;

namespace {

class ConstantPolicy final : public FeedbackPolicy {
public:
    explicit ConstantPolicy(double u) : u_(u) {}
    double control(double, double) const override { return u_; }

private:
    double u_;
};

double sample_mean(const PathBatch& b, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < b.n_paths(); ++i) s += b.x(i, k);
    return s / static_cast<double>(b.n_paths());
}

double sample_var(const PathBatch& b, std::size_t k) {
    const double m = sample_mean(b, k);
    double s = 0.0;
    for (std::size_t i = 0; i < b.n_paths(); ++i) s += (b.x(i, k) - m) * (b.x(i, k) - m);
    return s / static_cast<double>(b.n_paths() - 1);
}

CatalogParams witness_catalog() {
    auto q = testing::confined_catalog();
    q.n_controls = 5;
    return q;
}

const SpaceGrid kSpace{-4.0, 4.0, 101};

}  // namespace

TEST_CASE("driftless paths are a martingale") {
    const auto p = testing::constant_cost(0.0, 1.0, 0.0);
    const std::size_t n = 4000;
    const auto b = simulate_feedback(p, ConstantPolicy(0.5), 0.0, 0.3, 0.01, 1.0, n, 42);
    CHECK(b.n_steps() == 100);
    CHECK(std::abs(sample_mean(b, 100) - 0.3) <= 3.0 / std::sqrt(static_cast<double>(n)));
    for (std::size_t i = 0; i < 10; ++i) CHECK(b.x(i, 0) == 0.3);
}

TEST_CASE("Ornstein-Uhlenbeck variance") {
    auto p = testing::constant_cost(0.0);
    p.drift = [](double, double x, double) { return -x; };
    const std::size_t n = 10000;
    const double h = 0.01;
    const auto b = simulate_feedback(p, ConstantPolicy(0.0), 0.0, 0.0, h, 1.0, n, 9);
    const double exact = (1.0 - std::exp(-2.0)) / 2.0;
    const double v = sample_var(b, b.n_steps());
    // Euler bias is about exact * h / 2; the variance estimate has SE exact * sqrt(2 / n).
    CHECK(std::abs(v - exact) <= 4.0 * exact * std::sqrt(2.0 / n) + exact * h);
}

TEST_CASE("batches are reproducible from the seed") {
    const auto p = catalog_problem(testing::confined_catalog());
    const ConstantPolicy u(0.5);
    const auto a = simulate_feedback(p, u, 0.0, 0.1, 0.05, 2.0, 64, 123);
    const auto b = simulate_feedback(p, u, 0.0, 0.1, 0.05, 2.0, 64, 123);
    const auto c = simulate_feedback(p, u, 0.0, 0.1, 0.05, 2.0, 64, 124);
    CHECK(a.states() == b.states());
    CHECK(a.controls() == b.controls());
    CHECK(a.states() != c.states());
    // Stream keys are per path: a smaller batch is a prefix of a larger one.
    const auto d = simulate_feedback(p, u, 0.0, 0.1, 0.05, 2.0, 16, 123);
    for (std::size_t i = 0; i < 16; ++i) {
        for (std::size_t k = 0; k <= d.n_steps(); ++k) CHECK(d.x(i, k) == a.x(i, k));
    }
    CHECK_THROWS_AS(simulate_feedback(p, u, 0.0, 0.1, 0.03, 2.0, 8, 1), DomainError);
}

TEST_CASE("Monte Carlo cost of trivial integrands") {
    const auto p = testing::constant_cost(0.0, 1.0, 0.0);
    const auto b = simulate_feedback(p, ConstantPolicy(0.0), 0.0, 0.0, 0.01, 2.0, 500, 5);
    const auto d = DiscountSpec::exponential(0.5, 1.0);
    const auto z = mc_cost(b, d, 0.0, p.base_cost);
    CHECK(z.mean == 0.0);
    CHECK(z.std_error == 0.0);

    const double c = 0.8, rho = 0.5, H = 2.0, delta = 0.5;
    const Coefficient g = [c](double, double, double) { return c; };
    const auto e = mc_cost(b, d, rho, g);
    const double exact = c * (1.0 - std::exp(-delta * (H - rho))) / delta;
    const double quad = 0.01 * 0.01 * delta * delta * c * (H - rho) / 12.0;
    CHECK(std::abs(e.mean - exact) <= 3.0 * e.std_error + quad + 1e-14);
    CHECK(e.n_used == 500);

    const auto t = mc_cost(b, d, H, g, [](double) { return 2.0; }, 0.5);
    CHECK(t.mean == doctest::Approx(1.0));
    CHECK_THROWS_AS(mc_cost(b, d, 2.5, g), DomainError);
    CHECK_THROWS_AS(mc_cost(b, d, 0.005, g), DomainError);
}

TEST_CASE("guard box flags escaping paths") {
    const auto p = testing::constant_cost(1.0, 1.0, 0.0);
    const auto b = simulate_feedback(p, ConstantPolicy(0.0), 0.0, 0.0, 0.01, 1.0, 200, 3, GuardBox{-0.5, 0.5});
    CHECK(b.flag_count() > 2);
    CHECK_THROWS_AS(mc_cost(b, DiscountSpec::exponential(0.5, 1.0), 0.0, p.base_cost), GuardError);
    const GuardBox g = guard_for(SpaceGrid{-4.0, 4.0, 11});
    CHECK(g.lo == -6.0);
    CHECK(g.hi == 6.0);
}

TEST_CASE("standard error scales with the square root of the path count") {
    const auto p = catalog_problem(testing::confined_catalog());
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 1.0);
    const ConstantPolicy u(0.0);
    const auto small = mc_cost(simulate_feedback(p, u, 0.0, 0.1, 0.05, 2.0, 2000, 77), d, 0.0, p.base_cost);
    const auto large = mc_cost(simulate_feedback(p, u, 0.0, 0.1, 0.05, 2.0, 8000, 78), d, 0.0, p.base_cost);
    const double ratio = small.std_error / large.std_error;
    CHECK(ratio >= 2.0 * 0.7);
    CHECK(ratio <= 2.0 * 1.3);
}

TEST_CASE("pairwise summation") {
    std::vector<double> v(1001);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    CHECK(pairwise_sum(v) == 500500.0);
    CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}

TEST_CASE("the discounted tail strategy is verified by simulation") {
    const auto p = catalog_problem(testing::confined_catalog());
    const double delta = 0.5, anchor = 1.0, x0 = 0.1, step = 0.025;
    const auto tail = solve_discounted_tail(p, delta, anchor, kSpace, 1e-3, step);
    const TablePolicy policy(tail.strategy);
    const auto batch = simulate_feedback(p, policy, anchor, x0, step, tail.horizon, 4000, 2024, guard_for(kSpace));
    const auto d = DiscountSpec::exponential(delta, 1.0);
    // exp(delta anchor) V_tail(anchor) is the anchored functional with weight exp(-delta (s - anchor)).
    const auto est = mc_cost(batch, d, anchor, p.base_cost);
    const double pde = std::exp(delta * anchor) * tail.value.interpolate(0, x0);
    const auto fine = solve_discounted_tail(p, delta, anchor, SpaceGrid{-4.0, 4.0, 201}, 1e-3, 0.5 * step);
    const double grid_tol =
        2.0 * std::exp(delta * anchor) * std::abs(fine.value.interpolate(0, x0) - tail.value.interpolate(0, x0));
    MESSAGE("mc " << est.mean << " +- " << est.std_error << " pde " << pde << " grid " << grid_tol);
    CHECK(std::abs(est.mean - pde) <= 3.0 * est.std_error + grid_tol);
}

TEST_CASE("equilibrium play is a pure function of time and nearest node") {
    const auto p = catalog_problem(testing::confined_catalog());
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 1.0);
    const auto tail = solve_discounted_tail(p, 0.5, 1.0, kSpace, 1e-3, 0.025);
    const auto eq = solve_equilibrium_system(p, d, 0.0, kSpace, 40, tail);
    const auto glued = glue(eq, tail, 0.0, 0.5);
    const auto b = simulate_feedback(p, glued, 0.0, 0.1, 0.025, 3.0, 500, 11, guard_for(kSpace));
    std::map<std::pair<std::size_t, long>, double> seen;
    for (std::size_t i = 0; i < b.n_paths(); ++i) {
        if (b.flagged(i)) continue;
        for (std::size_t k = 0; k <= b.n_steps(); ++k) {
            const long node = std::lround((b.x(i, k) - kSpace.x_min) / kSpace.dx());
            const auto [it, fresh] = seen.emplace(std::make_pair(k, node), b.u(i, k));
            if (!fresh) CHECK(it->second == b.u(i, k));
            CHECK(b.u(i, k) == glued.control(b.t(k), b.x(i, k)));
        }
    }
}

TEST_CASE("naive agent under exponential discounting never revises") {
    const auto p = catalog_problem(witness_catalog());
    const auto d = DiscountSpec::exponential(0.5, 1.0);
    const auto rep = naive_agent(p, d, 0.0, 0.1, 0.25, 0.025, 500, 1, NaiveSettings{kSpace});
    REQUIRE(rep.plans() == 4);
    for (const auto& r : rep.revisions) CHECK(r.deviation == 0.0);
    CHECK(rep.cost.n_used > 0);

    const auto one = naive_agent(p, DiscountSpec::matched_hyperbolic(0.5, 1.0), 0.0, 0.1, 1.0, 0.025, 200, 1,
                                 NaiveSettings{kSpace});
    CHECK(one.plans() == 1);
    CHECK(one.max_deviation() == 0.0);
    CHECK_THROWS_AS(naive_agent(p, d, 0.0, 0.1, 0.3, 0.025, 10, 1, NaiveSettings{kSpace}), DomainError);
}

TEST_CASE("lattice oracle pins the time-inconsistency witness") {
    const auto p = catalog_problem(witness_catalog());
    const auto hyp = DiscountSpec::matched_hyperbolic(0.5, 1.0);
    const auto exp = DiscountSpec::exponential(0.5, 1.0);

    const auto oracle = testing::lattice_revision_deviations(p, hyp, 0.0, 0.25, testing::Lattice{});
    double worst = 0.0;
    for (double v : oracle) worst = std::max(worst, v);
    REQUIRE(worst > 0.0);
    for (double v : testing::lattice_revision_deviations(p, exp, 0.0, 0.25, testing::Lattice{})) CHECK(v == 0.0);

    const auto rep = naive_agent(p, hyp, 0.0, 0.1, 0.25, 0.025, 500, 1, NaiveSettings{kSpace});
    CHECK(rep.max_deviation() > 0.0);
    for (std::size_t i = 1; i < rep.plans(); ++i) {
        // Nonzero deviations must be a whole number of control-grid spacings.
        const double spacing = p.controls[1] - p.controls[0];
        const double units = rep.revisions[i].deviation / spacing;
        CHECK(std::abs(units - std::round(units)) <= 1e-12);
    }
}

TEST_CASE("spike perturbations") {
    const auto p = catalog_problem(witness_catalog());
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 1.0);
    const auto tail = solve_discounted_tail(p, 0.5, 1.0, kSpace, 1e-3, 0.025);
    const auto eq = solve_equilibrium_system(p, d, 0.0, kSpace, 40, tail);
    const auto glued = glue(eq, tail, 0.0, 0.5);
    const Grid1D& g = glued.head_strategy().grid();
    const double dt = g.dt();
    const double ts = g.t(10);

    const auto same = glued.head_strategy().row(11);
    for (double v : spike_cost(p, d, glued, ts, same, dt)) CHECK(v == 0.0);
    for (double v : spike_cost(p, d, glued, ts, p.controls.back(), 0.0)) CHECK(v == 0.0);
    CHECK_THROWS_AS(spike_cost(p, d, glued, g.t(38), 0.0, 4.0 * dt), DomainError);
    CHECK_THROWS_AS(spike_cost(p, d, glued, ts, 0.3, dt), DomainError);

    for (double u : p.controls) {
        const auto diff = spike_cost(p, d, glued, ts, u, dt);
        for (std::size_t i = 0; i < kSpace.n_x; ++i) {
            if (in_interior(kSpace, i)) CHECK(diff[i] / dt >= -1e-3);
        }
    }
}

TEST_CASE("naive agent on a zero-cost problem") {
    // The tail of a zero-cost problem is a single step unless the revisions force a longer one.
    const auto p = testing::constant_cost(0.0);
    const auto rep = naive_agent(p, DiscountSpec::matched_hyperbolic(0.5, 1.0), 0.0, 0.1, 0.25, 0.025, 50, 1,
                                 NaiveSettings{SpaceGrid{-4.0, 4.0, 41}});
    CHECK(rep.plans() == 4);
    CHECK(rep.max_deviation() == 0.0);
    CHECK(rep.cost.mean == 0.0);
}

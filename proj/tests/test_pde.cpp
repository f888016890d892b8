#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "equihor/classical.hpp"
#include "equihor/errors.hpp"
#include "equihor/pde.hpp"
#include "equihor/refinement.hpp"
#include "equihor/rng.hpp"
#include "support.hpp"

using namespace equihor;
using equihor::testing::sup_abs;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

const WeightFn unit = [](double, double) { return 1.0; };

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid1D(1.0, 0.0, 11, 0.0, 1.0, 10), DomainError);
    CHECK_THROWS_AS(Grid1D(0.0, 1.0, 2, 0.0, 1.0, 10), DomainError);
    CHECK_THROWS_AS(Grid1D(0.0, 1.0, 11, 0.0, 1.0, 0), DomainError);
    CHECK_THROWS_AS(Grid1D(0.0, 1.0, 11, 1.0, 1.0, 4), DomainError);

    const Grid1D g(-1.0, 1.0, 21, 0.5, 1.5, 10);
    CHECK(g.dx() == doctest::Approx(0.1));
    CHECK(g.dt() == doctest::Approx(0.1));
    CHECK(g.t(10) == 1.5);
    CHECK(g.time_index(0.8) == 3);
    CHECK_THROWS_AS(g.time_index(0.85), DomainError);
    CHECK(g.nearest_time(-3.0) == 0);
    CHECK(g.nearest_time(9.0) == 10);
}

TEST_CASE("cfl substep examples") {
    const auto p = testing::simple_problem(1.0, 0.0, [](double) { return 0.0; }, 0.0);
    // dx = 0.1 on [-1, 1].
    CHECK(cfl_steps(p, Grid1D(-1.0, 1.0, 21, 0.0, 0.001, 1)) == 1);
    CHECK(cfl_steps(p, Grid1D(-1.0, 1.0, 21, 0.0, 0.02, 1)) == 3);
    CHECK(cfl_steps(p, Grid1D(-1.0, 1.0, 21, 0.0, 0.009, 1)) == 1);

    const auto q = testing::simple_problem(0.5, 2.0, [](double) { return 0.0; }, 0.0);
    // bound = 0.9 * 0.01 / (0.25 + 2 * 0.1) = 0.02
    const Grid1D g(-1.0, 1.0, 21, 0.0, 0.1, 1);
    CHECK(cfl_bound(q, g) == doctest::Approx(0.02));
    CHECK(cfl_steps(q, g) == 5);

    const SpaceGrid s{-1.0, 1.0, 21};
    const std::size_t n = cfl_time_steps(q, s, 0.0, 1.0);
    CHECK(cfl_steps(q, Grid1D(s, 0.0, 1.0, n)) == 1);
    CHECK(cfl_steps(q, Grid1D(s, 0.0, 1.0, n - 1)) > 1);
}

TEST_CASE("zero is a fixed point of the hjb step") {
    const auto p = testing::simple_problem(1.0, 1.0, [](double) { return 0.0; }, 0.0);
    const Grid1D g(-2.0, 2.0, 41, 0.0, 0.01, 1);
    const std::vector<double> zero(41, 0.0);
    const auto r = hjb_step(p, g, zero, 0.0, unit);
    for (double v : r.values) CHECK(v == 0.0);
    CHECK(r.controls.size() == 41);
}

TEST_CASE("one step with a time-only cost integrates exactly to second order") {
    // b and sigma arbitrary: the cost does not depend on x, so the slice stays flat.
    auto p = testing::exp_cost(1.0, 0.8, 1.0);
    p.drift = [](double, double x, double u) { return std::sin(x) + u; };
    const double t_k = 0.3;
    double prev_err = 0.0;
    for (double dt : {2e-3, 1e-3}) {
        const Grid1D g(-2.0, 2.0, 41, t_k, t_k + dt, 1);
        const std::vector<double> zero(41, 0.0);
        const auto r = hjb_step(p, g, zero, t_k, [](double, double) { return 2.0; });
        const double oracle = 2.0 * (std::exp(-t_k) - std::exp(-(t_k + dt)));
        double err = 0.0;
        for (double v : r.values) err = std::max(err, std::abs(v - 2.0 * dt * std::exp(-t_k)));
        CHECK(err <= 2.0 * dt * dt);
        CHECK(std::abs(r.values[20] - oracle) <= 2.0 * dt * dt);
        if (prev_err > 0.0) CHECK(prev_err / err == doctest::Approx(4.0).epsilon(0.01));
        prev_err = err;
    }
}

TEST_CASE("symmetric problem keeps symmetric slices") {
    CatalogParams q;
    q.sigma1 = 0.0;
    const auto p = catalog_problem(q);
    const SpaceGrid s{-3.0, 3.0, 61};
    const Grid1D g(s, 0.0, 1.0, 100);
    const auto sol = solve_finite_horizon(p, g, unit, [](double) { return 0.0; });
    for (std::size_t k = 0; k <= g.n_t(); k += 10) {
        const auto row = sol.value.row(k);
        for (std::size_t i = 0; i < s.n_x; ++i) CHECK(std::abs(row[i] - row[s.n_x - 1 - i]) <= 1e-10);
    }
}

TEST_CASE("linear step examples") {
    const auto p = testing::constant_cost(1.0, 0.7, 0.0);
    const Grid1D g(-2.0, 2.0, 41, 0.0, 0.01, 1);
    const std::vector<double> controls(41, 0.5);
    const std::vector<double> c(41, 3.25);
    const auto flat = linear_step(p, g, c, 0.0, controls, [](double) { return 0.0; });
    for (double v : flat) CHECK(v == 3.25);

    const std::vector<double> zero(41, 0.0);
    const auto one = linear_step(p, g, zero, 0.0, controls, [](double) { return 1.0; });
    for (double v : one) CHECK(v == doctest::Approx(0.01).epsilon(1e-12));

    const std::vector<double> bad(41, 0.3);
    CHECK_THROWS_AS(linear_step(p, g, zero, 0.0, bad, [](double) { return 1.0; }), DomainError);
}

TEST_CASE("linear step under the hjb controls reproduces the hjb step") {
    const auto p = catalog_problem(testing::confined_catalog());
    const Grid1D g(-4.0, 4.0, 81, 0.2, 0.205, 1);
    REQUIRE(cfl_steps(p, g) == 1);
    std::vector<double> next(81);
    for (std::size_t i = 0; i < 81; ++i) next[i] = 0.3 * std::cos(g.x(i)) + 0.05 * g.x(i);
    const auto h = hjb_step(p, g, next, 0.2, [](double t, double) { return std::exp(-0.5 * t); });
    const auto l = linear_step(p, g, next, 0.2, h.controls, [](double t) { return std::exp(-0.5 * t); });
    for (std::size_t i = 0; i < 81; ++i) CHECK(h.values[i] == l[i]);
}

// The linearly extrapolated boundary rows are not a monotone operation, so both properties are
// checked away from the edges.
TEST_CASE("comparison and minimality on random slices") {
    const auto p = catalog_problem(testing::confined_catalog());
    const Grid1D g(-4.0, 4.0, 81, 0.0, 0.05, 1);
    REQUIRE(cfl_steps(p, g) > 1);
    const CounterRng rng(7);
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        std::vector<double> a(81), b(81), u(81);
        for (std::size_t i = 0; i < 81; ++i) {
            a[i] = std::sin(g.x(i) + trial) + 0.2 * rng.uniform(trial, i);
            b[i] = a[i] + rng.uniform(trial + 1000, i);
            u[i] = p.controls[static_cast<std::size_t>(rng.uniform(trial + 2000, i) * 5.0)];
        }
        const auto ra = hjb_step(p, g, a, 0.0, unit);
        const auto rb = hjb_step(p, g, b, 0.0, unit);
        for (std::size_t i = 0; i < 81; ++i) {
            if (in_interior(g.space(), i)) CHECK(ra.values[i] <= rb.values[i] + 1e-14);
        }
        // A single fixed step against the minimized one, both without substeps.
        const Grid1D g1(-4.0, 4.0, 81, 0.0, 0.004, 1);
        REQUIRE(cfl_steps(p, g1) == 1);
        const auto h = hjb_step(p, g1, a, 0.0, unit);
        const auto l = linear_step(p, g1, a, 0.0, u, [](double) { return 1.0; });
        for (std::size_t i = 0; i < 81; ++i) {
            if (in_interior(g1.space(), i)) CHECK(h.values[i] <= l[i] + 1e-14);
        }
    }
}

TEST_CASE("blow-up raises a stability error") {
    const auto p = testing::constant_cost(1.0);
    const Grid1D g(-1.0, 1.0, 21, 0.0, 0.001, 1);
    std::vector<double> next(21, 0.0);
    next[7] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(hjb_step(p, g, next, 0.0, unit), StabilityError);
    try {
        hjb_step(p, g, next, 0.0, unit);
    } catch (const StabilityError& e) {
        CHECK(e.index() >= 6);
        CHECK(e.index() <= 8);
    }
}

TEST_CASE("refinement of a catalog solve is first order in the interior") {
    const auto p = catalog_problem(testing::confined_catalog());
    const double T = 1.0;
    std::vector<ValueField> fields;
    std::size_t n_t = 50;
    for (std::size_t n_x : {41u, 81u, 161u}) {
        const Grid1D g(SpaceGrid{-4.0, 4.0, n_x}, 0.0, T, n_t);
        fields.push_back(solve_finite_horizon(p, g, unit, [](double) { return 0.0; }).value);
        n_t *= 2;
    }
    const double d1 = field_gap(fields[0], fields[1]);
    const double d2 = field_gap(fields[1], fields[2]);
    MESSAGE("successive differences " << d1 << " " << d2 << " ratio " << d1 / d2);
    CHECK(d1 / d2 >= 1.5);
    CHECK(d1 / d2 <= 4.0);
}

TEST_CASE("interpolation and lookup") {
    const Grid1D g(0.0, 1.0, 11, 0.0, 1.0, 2);
    ValueField f(g);
    for (std::size_t i = 0; i < 11; ++i) f.at(1, i) = 2.0 * g.x(i);
    CHECK(f.interpolate(1, 0.25) == doctest::Approx(0.5));
    CHECK(f.interpolate(1, -3.0) == 0.0);
    CHECK(f.interpolate(1, 7.0) == doctest::Approx(2.0));

    StrategyTable s(g);
    for (std::size_t i = 0; i < 11; ++i) s.at(0, i) = i < 5 ? -1.0 : 1.0;
    CHECK(s.lookup(0.1, 0.12) == -1.0);
    CHECK(s.lookup(0.1, 0.46) == 1.0);
    CHECK(s.lookup(0.1, 0.9) == 1.0);
}

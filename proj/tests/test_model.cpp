#include <cmath>
#include <vector>

#include "doctest.h"
#include "equihor/errors.hpp"
#include "equihor/model.hpp"
#include "equihor/rng.hpp"
#include "support.hpp"

using namespace equihor;

namespace {

// b = u, sigma = 1, g0 = u^2 on {-1, 0, 1}.
ProblemSpec quadratic_problem() {
    ProblemSpec p;
    p.drift = [](double, double, double u) { return u; };
    p.diffusion = [](double, double, double) { return 1.0; };
    p.base_cost = [](double, double, double u) { return u * u; };
    p.cost_bound = [](double) { return 1.0; };
    p.cost_sup = 1.0;
    p.controls = {-1.0, 0.0, 1.0};
    p.epsilon = 0.5;
    return p;
}

}  // namespace

TEST_CASE("discount evaluation") {
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 2.0);
    CHECK(discount_eval(d, 0.0) == 1.0);
    CHECK(discount_eval(d, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(discount_eval(d, 3.0) == doctest::Approx(0.223130160148429).epsilon(1e-12));
    CHECK(std::abs(d.head(2.0) - std::exp(-1.0)) <= 1e-12);
    CHECK_THROWS_AS(discount_eval(d, -1e-9), DomainError);

    const auto e = DiscountSpec::exponential(0.3, 1.0);
    CHECK(discount_eval(e, 0.7) == std::exp(-0.3 * 0.7));
    CHECK(discount_eval(e, 1.7) == std::exp(-0.3 * 1.7));

    CHECK_THROWS_AS(DiscountSpec::exponential(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(DiscountSpec::exponential(0.5, -1.0), DomainError);
}

TEST_CASE("matched hyperbolic rate") {
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 2.0);
    CHECK(d.hyperbolic_rate() == doctest::Approx((std::exp(1.0) - 1.0) / 2.0).epsilon(1e-14));
    CHECK(DiscountSpec::matched_hyperbolic(0.5, 0.0).hyperbolic_rate() == 0.5);
}

TEST_CASE("discount is strictly decreasing and continuous at T0") {
    for (const auto& d : {DiscountSpec::matched_hyperbolic(0.5, 2.0), DiscountSpec::exponential(0.5, 2.0),
                          DiscountSpec::matched_hyperbolic(1.3, 0.4)}) {
        double prev = discount_eval(d, 0.0);
        for (int i = 1; i <= 5000; ++i) {
            const double tau = (d.T0() + 5.0) * i / 5000.0;
            const double cur = discount_eval(d, tau);
            REQUIRE(cur < prev);
            REQUIRE(cur > 0.0);
            prev = cur;
        }
        const double left = d.head(d.T0());
        const double right = discount_eval(d, d.T0());
        CHECK(std::abs(left - right) <= 1e-12);
    }
}

TEST_CASE("hamiltonian examples") {
    const auto p = quadratic_problem();
    CHECK(hamiltonian(p, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0) == 1.0);
    CHECK(hamiltonian(p, 0.0, 0.0, 1.0, 2.0, 4.0, 0.0) == 4.0);
    CHECK(hamiltonian(p, 0.0, 0.0, 1.0, -5.0, 0.0, 1.0) == -4.0);
    CHECK_THROWS_AS(hamiltonian(p, 0.0, 0.0, 0.5, 0.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(hamiltonian(p, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0), DomainError);
}

TEST_CASE("argmin examples and tie rule") {
    const auto p = quadratic_problem();
    CHECK(argmin_control(p, 0.0, 0.0, 0.0, 0.0, 1.0) == 0.0);
    CHECK(argmin_control(p, 0.0, 0.0, -5.0, 0.0, 1.0) == 1.0);
    CHECK(argmin_control(p, 0.0, 0.0, 0.0, 0.0, 0.0) == -1.0);
}

TEST_CASE("argmin is invariant under positive scaling and is a true minimizer") {
    const auto p = catalog_problem({});
    const CounterRng rng(11);
    for (std::uint64_t n = 0; n < 2000; ++n) {
        const double t = 3.0 * rng.uniform(0, n);
        const double x = -4.0 + 8.0 * rng.uniform(1, n);
        const double grad = -3.0 + 6.0 * rng.uniform(2, n);
        const double hess = -3.0 + 6.0 * rng.uniform(3, n);
        const double w = rng.uniform(4, n);
        const double c = 0.1 + 10.0 * rng.uniform(5, n);
        const double u = argmin_control(p, t, x, grad, hess, w);
        // Powers of two scale exactly, so the comparison is exact.
        CHECK(argmin_control(p, t, x, 4.0 * grad, 4.0 * hess, 4.0 * w) == u);
        const double uc = argmin_control(p, t, x, c * grad, c * hess, c * w);
        CHECK(hamiltonian(p, t, x, uc, grad, hess, w) ==
              doctest::Approx(hamiltonian(p, t, x, u, grad, hess, w)).epsilon(1e-12));
        const double best = hamiltonian(p, t, x, u, grad, hess, w);
        for (double v : p.controls) CHECK(best <= hamiltonian(p, t, x, v, grad, hess, w));
    }
}

TEST_CASE("upwind argmin picks the side by drift sign") {
    const auto p = quadratic_problem();
    // Forward slope very negative, backward slope very positive: both push towards the extremes,
    // each control only sees its own side.
    const UpwindGradient g{-5.0, 5.0};
    // u = 1: -5 + 1 = -4; u = -1: 5 * -1 + 1 = -4; tie, smallest wins.
    CHECK(argmin_control(p, 0.0, 0.0, g, 0.0, 1.0) == -1.0);
    CHECK(argmin_control(p, 0.0, 0.0, UpwindGradient{-5.0, 0.0}, 0.0, 1.0) == 1.0);
}

TEST_CASE("tail bound examples") {
    auto p = testing::exp_cost(1.0);
    CHECK(tail_bound(p, 0.0) == 1.0);
    CHECK(tail_bound(p, 2.0) == doctest::Approx(0.1353352832366127).epsilon(1e-14));
    p.cost_tail = [](double T) { return 1.5 * std::exp(-2.0 * T); };
    CHECK(tail_bound(p, 1.0) == doctest::Approx(0.20300292485491905).epsilon(1e-14));
    CHECK_THROWS_AS(tail_bound(p, -1.0), DomainError);
    p.cost_tail = {};
    CHECK_THROWS_AS(tail_bound(p, 1.0), UnsupportedProblem);

    const auto c = catalog_problem({});
    double prev = tail_bound(c, 0.0);
    for (int i = 1; i < 100; ++i) {
        const double cur = tail_bound(c, 0.25 * i);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("catalog controls are symmetric with an exact zero") {
    const auto u = symmetric_controls(1.0, 5);
    REQUIRE(u.size() == 5);
    CHECK(u[2] == 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == -u[u.size() - 1 - i]);
    CHECK(u.front() == -1.0);
    CHECK(u.back() == 1.0);
}

TEST_CASE("validation of the catalog") {
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 2.0);
    CatalogParams q;
    CHECK(validate_problem(catalog_problem(q), d, 500).ok());

    q.epsilon = 4.0;
    const auto rep = validate_problem(catalog_problem(q), d, 500);
    CHECK(rep.has(Violation::Kind::non_degeneracy));
    CHECK_FALSE(rep.has(Violation::Kind::splice));
}

TEST_CASE("validation flags structural defects") {
    const auto p = catalog_problem({});
    const double delta = 0.5, T0 = 2.0;
    // Hyperbolic head with the unmatched rate delta misses exp(-delta T0) at the splice.
    const auto bad = DiscountSpec::custom(delta, T0, [delta](double tau) { return 1.0 / (1.0 + delta * tau); });
    CHECK(validate_problem(p, bad, 200).has(Violation::Kind::splice));

    const auto off = DiscountSpec::custom(delta, T0, [](double tau) { return 0.9 * std::exp(-0.5 * tau); });
    CHECK(validate_problem(p, off, 200).has(Violation::Kind::discount_origin));

    auto q = p;
    q.controls = {0.0, -1.0, 1.0};
    CHECK(validate_problem(q, DiscountSpec::exponential(delta, T0), 200).has(Violation::Kind::control_grid));

    q = p;
    q.base_cost = [](double, double, double) { return 10.0; };
    CHECK(validate_problem(q, DiscountSpec::exponential(delta, T0), 200).has(Violation::Kind::cost_range));

    q = p;
    q.cost_tail = [](double T) { return 3.0 * std::exp(-T); };  // wrong rate
    CHECK(validate_problem(q, DiscountSpec::exponential(delta, T0), 200).has(Violation::Kind::tail_map));

    q = p;
    const auto g0 = p.base_cost;
    // Keeps a hyperbolic weight past T0.
    q.two_time_cost = [g0](double r, double s, double x, double u) { return g0(s, x, u) / (1.0 + (s - r)); };
    CHECK(validate_problem(q, DiscountSpec::exponential(delta, T0), 200).has(Violation::Kind::two_time_tail));

    q.two_time_cost = [g0, delta](double r, double s, double x, double u) {
        return std::exp(-delta * (s - r)) * g0(s, x, u);
    };
    CHECK(validate_problem(q, DiscountSpec::exponential(delta, T0), 200).ok());
}

TEST_CASE("running cost uses the two-time hook when present") {
    auto p = catalog_problem({});
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 1.0);
    CHECK(running_cost(p, d, 0.2, 0.7, 0.1, 0.5) == discount_eval(d, 0.5) * p.base_cost(0.7, 0.1, 0.5));
    p.two_time_cost = [](double, double, double, double) { return 0.125; };
    CHECK(running_cost(p, d, 0.2, 0.7, 0.1, 0.5) == 0.125);
}

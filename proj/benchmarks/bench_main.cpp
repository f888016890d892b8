#include <benchmark/benchmark.h>

#include <vector>

#include "equihor/classical.hpp"
#include "equihor/equilibrium.hpp"
#include "equihor/sim.hpp"

using namespace equihor;

namespace {

CatalogParams confined() {
    CatalogParams q;
    q.beta0 = 0.2;
    q.beta1 = -1.0;
    q.x_star = 0.3;
    return q;
}

void BM_HjbStep(benchmark::State& state) {
    const auto p = catalog_problem({});
    const auto n_x = static_cast<std::size_t>(state.range(0));
    const Grid1D g(-4.0, 4.0, n_x, 0.0, 1.0, 1000);
    const BackwardStepper stepper(p, g);
    std::vector<double> next(n_x);
    for (std::size_t i = 0; i < n_x; ++i) next[i] = g.x(i) * g.x(i) / 16.0;
    const CostRate cost = [&p](double t, double x, double u) { return p.base_cost(t, x, u); };
    for (auto _ : state) {
        auto r = stepper.hjb(next, 0.5, cost);
        benchmark::DoNotOptimize(r.values.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n_x));
}
BENCHMARK(BM_HjbStep)->Arg(101)->Arg(401);

void BM_EquilibriumSolve(benchmark::State& state) {
    const auto p = catalog_problem(confined());
    const auto d = DiscountSpec::matched_hyperbolic(0.5, 1.0);
    const SpaceGrid space{-4.0, 4.0, 101};
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto tail = solve_discounted_tail(p, 0.5, 1.5, space, 1e-3, 1.0 / static_cast<double>(n));
    for (auto _ : state) {
        auto eq = solve_equilibrium_system(p, d, 0.5, space, n, tail);
        benchmark::DoNotOptimize(eq.theta.values().data());
    }
}
BENCHMARK(BM_EquilibriumSolve)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const auto p = catalog_problem(confined());
    const SpaceGrid space{-4.0, 4.0, 101};
    const auto tail = solve_discounted_tail(p, 0.5, 0.0, space, 1e-3, 0.025);
    const TablePolicy policy(tail.strategy);
    const auto n_paths = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto b = simulate_feedback(p, policy, 0.0, 0.1, 0.025, 5.0, n_paths, 1, guard_for(space));
        benchmark::DoNotOptimize(b.states().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n_paths) * 200);
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include "equihor/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "equihor/errors.hpp"
#include "equihor/rng.hpp"

namespace equihor {

GuardBox guard_for(const SpaceGrid& space) { return {space.x_min - 2.0, space.x_max + 2.0}; }

PathBatch::PathBatch(std::uint64_t seed, double t0, double step, std::size_t n_steps, std::size_t n_paths)
    : seed_(seed),
      t0_(t0),
      step_(step),
      n_steps_(n_steps),
      n_paths_(n_paths),
      states_(n_paths * (n_steps + 1), 0.0),
      controls_(n_paths * (n_steps + 1), 0.0),
      flags_(n_paths, 0) {}

std::size_t PathBatch::flag_count() const noexcept {
    return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

std::size_t PathBatch::node(double t) const {
    const double pos = (t - t0_) / step_;
    const auto k = static_cast<long long>(std::llround(pos));
    if (k < 0 || static_cast<std::size_t>(k) > n_steps_ || std::abs(pos - static_cast<double>(k)) > 1e-9) {
        throw DomainError("time is not a node of the path batch");
    }
    return static_cast<std::size_t>(k);
}

namespace {

std::size_t step_count(double span, double step) {
    if (!(step > 0.0)) throw DomainError("step must be positive");
    if (!(span > 0.0)) throw DomainError("horizon must lie after the start time");
    const double pos = span / step;
    const auto n = static_cast<std::size_t>(std::llround(pos));
    if (n == 0 || std::abs(pos - static_cast<double>(n)) > 1e-9 * std::max(1.0, pos)) {
        throw DomainError("horizon must be a multiple of the step");
    }
    return n;
}

}  // namespace

PathBatch simulate_feedback(const ProblemSpec& p, const FeedbackPolicy& policy, double t0, double x0, double step,
                            double horizon, std::size_t n_paths, std::uint64_t seed, const GuardBox& guard) {
    if (n_paths == 0) throw DomainError("need at least one path");
    const std::size_t n = step_count(horizon - t0, step);
    PathBatch batch(seed, t0, step, n, n_paths);
    const CounterRng rng(seed);
    const double root = std::sqrt(step);
    for (std::size_t path = 0; path < n_paths; ++path) {
        double x = x0;
        bool frozen = false;
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = batch.t(k);
            const double u = policy.control(t, x);
            batch.x(path, k) = x;
            batch.u(path, k) = u;
            if (k == n || frozen) continue;
            const double xi = rng.normal(path, k);
            x = x + p.drift(t, x, u) * step + p.diffusion(t, x, u) * root * xi;
            if (!std::isfinite(x) || x < guard.lo || x > guard.hi) {
                batch.flag(path);
                frozen = true;
                if (!std::isfinite(x)) x = batch.x(path, k);
            }
        }
    }
    return batch;
}

double pairwise_sum(std::span<const double> values) noexcept {
    if (values.size() <= 8) return std::accumulate(values.begin(), values.end(), 0.0);
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

McEstimate mc_cost(const PathBatch& batch, const DiscountSpec& d, double rho, const Coefficient& g0,
                   const TerminalFn& terminal, double terminal_factor) {
    if (rho < batch.t0() - 1e-12 || rho > batch.horizon() + 1e-12) {
        throw DomainError("anchor lies outside the simulated window");
    }
    const std::size_t k0 = batch.node(rho);
    const std::size_t N = batch.n_steps();
    const double h = batch.step();

    McEstimate est;
    est.n_flagged = batch.flag_count();
    if (est.n_flagged * 100 >= batch.n_paths()) {
        throw GuardError("too many paths left the guard box: " + std::to_string(est.n_flagged) + " of " +
                         std::to_string(batch.n_paths()));
    }

    std::vector<double> weight(N + 1, 0.0);
    for (std::size_t k = k0; k <= N; ++k) weight[k] = discount_eval(d, h * static_cast<double>(k - k0));

    std::vector<double> costs;
    costs.reserve(batch.n_paths());
    std::vector<double> integrand(N + 1);
    for (std::size_t path = 0; path < batch.n_paths(); ++path) {
        if (batch.flagged(path)) continue;
        for (std::size_t k = k0; k <= N; ++k) {
            const double f = weight[k] * g0(batch.t(k), batch.x(path, k), batch.u(path, k));
            integrand[k] = (k == k0 || k == N) ? 0.5 * f : f;
        }
        double c = h * pairwise_sum(std::span<const double>(integrand).subspan(k0));
        if (k0 == N) c = 0.0;
        if (terminal) c += terminal_factor * terminal(batch.x(path, N));
        costs.push_back(c);
    }
    est.n_used = costs.size();
    if (costs.empty()) return est;
    const double n = static_cast<double>(costs.size());
    est.mean = pairwise_sum(costs) / n;
    if (costs.size() > 1) {
        std::vector<double> sq(costs.size());
        for (std::size_t i = 0; i < costs.size(); ++i) sq[i] = (costs[i] - est.mean) * (costs[i] - est.mean);
        est.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
    }
    return est;
}

double NaiveReport::max_deviation() const noexcept {
    double m = 0.0;
    for (const auto& r : revisions) m = std::max(m, r.deviation);
    return m;
}

namespace {

// Plan i is played on [t0 + i interval, t0 + (i + 1) interval).
class PiecewisePolicy final : public FeedbackPolicy {
public:
    PiecewisePolicy(double t0, double interval, const std::vector<StrategyTable>& plans)
        : t0_(t0), interval_(interval), plans_(&plans) {}

    double control(double t, double x) const override {
        const double pos = (t - t0_) / interval_ + 1e-9;
        const auto i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0,
                                                           static_cast<double>(plans_->size() - 1)));
        return (*plans_)[i].lookup(t, x);
    }

private:
    double t0_;
    double interval_;
    const std::vector<StrategyTable>* plans_;
};

}  // namespace

NaiveReport naive_agent(const ProblemSpec& p, const DiscountSpec& d, double t0, double x0, double revision_interval,
                        double step, std::size_t n_paths, std::uint64_t seed, const NaiveSettings& settings) {
    const double T0 = d.T0();
    if (!(T0 > 0.0)) throw DomainError("naive agent needs T0 > 0");
    step_count(revision_interval, step);  // the interval must be a multiple of the step
    const std::size_t window = step_count(T0, step);
    const std::size_t n_plans = step_count(T0, revision_interval);

    // The last plan ends at t0 + 2 T0 - revision_interval; the tail must reach it.
    const TailSolution tail =
        solve_discounted_tail(p, d.delta(), t0 + T0, settings.space, settings.tol_tail, step, t0 + 2.0 * T0);

    std::vector<StrategyTable> plans;
    NaiveReport report;
    std::vector<double> terminal(settings.space.n_x);
    for (std::size_t i = 0; i < n_plans; ++i) {
        const double ti = t0 + revision_interval * static_cast<double>(i);
        const std::size_t kt = tail.value.grid().time_index(ti + T0);
        const double scale = std::exp(d.delta() * ti);
        const auto row = tail.value.row(kt);
        for (std::size_t j = 0; j < terminal.size(); ++j) terminal[j] = scale * row[j];
        auto sol = precommit_value(p, d, ti, ti + T0, terminal, settings.space, window);

        Revision rev{ti, 0.0};
        if (!plans.empty()) {
            const StrategyTable& old = plans.back();
            const auto before = old.row(old.grid().time_index(ti));
            const auto now = sol.strategy.row(0);
            for (std::size_t j = 0; j < now.size(); ++j) {
                rev.deviation = std::max(rev.deviation, std::abs(before[j] - now[j]));
            }
        }
        report.revisions.push_back(rev);
        plans.push_back(std::move(sol.strategy));
    }

    const PiecewisePolicy policy(t0, revision_interval, plans);
    const auto batch = simulate_feedback(p, policy, t0, x0, step, t0 + T0, n_paths, seed, guard_for(settings.space));
    const std::size_t k_end = tail.value.grid().time_index(t0 + T0);
    const ValueField& tv = tail.value;
    report.cost = mc_cost(batch, d, t0, p.base_cost,
                          [&tv, k_end](double x) { return tv.interpolate(k_end, x); }, std::exp(d.delta() * t0));
    return report;
}

std::vector<double> spike_cost(const ProblemSpec& p, const DiscountSpec& d, const GluedSolution& glued,
                               double t_spike, std::span<const double> u_alt, double eps) {
    const Grid1D& g = glued.head_strategy().grid();
    if (u_alt.size() != g.n_x()) throw DomainError("spike control slice does not match the grid");
    if (!(eps >= 0.0)) throw DomainError("spike length must be nonnegative");
    if (t_spike < g.t_start() - 1e-12 || t_spike + eps > g.t_end() + 1e-9 * g.dt()) {
        throw DomainError("spike window crosses the regime boundary");
    }
    for (double u : u_alt) {
        if (!std::binary_search(p.controls.begin(), p.controls.end(), u)) {
            throw DomainError("spike control is off the control grid");
        }
    }
    const std::size_t j = g.time_index(t_spike);
    StrategyTable perturbed = glued.head_strategy();
    // Row k drives the step ending at t_{k-1}, so rows in (t_spike, t_spike + eps] cover the spike.
    for (std::size_t k = j + 1; k <= g.n_t(); ++k) {
        if (g.t(k) - t_spike > eps + 1e-9 * g.dt()) break;
        std::copy(u_alt.begin(), u_alt.end(), perturbed.row(k).begin());
    }
    const auto base = evaluate_strategy_value(p, d, glued, t_spike);
    const auto alt = evaluate_strategy_value(p, d, glued, t_spike, &perturbed);
    std::vector<double> diff(g.n_x());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = alt.at(0, i) - base.at(0, i);
    return diff;
}

std::vector<double> spike_cost(const ProblemSpec& p, const DiscountSpec& d, const GluedSolution& glued,
                               double t_spike, double u_alt, double eps) {
    const std::vector<double> slice(glued.head_strategy().grid().n_x(), u_alt);
    return spike_cost(p, d, glued, t_spike, slice, eps);
}

}  // namespace equihor

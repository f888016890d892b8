#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include "emit.hpp"
#include "equihor/classical.hpp"
#include "equihor/equilibrium.hpp"
#include "equihor/errors.hpp"
#include "equihor/recursive.hpp"
#include "equihor/refinement.hpp"
#include "equihor/sim.hpp"
#include "json.hpp"

namespace equihor::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Collects what a command produced; serialized as summary.json.
class Report {
public:
    Report(const RunConfig& cfg, const Options& opt, std::string command, std::ostream& log)
        : opt_(opt), log_(log) {
        doc_["command"] = std::move(command);
        doc_["config_hash"] = fnv1a_hex(opt.config_text);
        doc_["seed"] = cfg.seed;
        doc_["checks_enabled"] = opt.check;
        doc_["metrics"] = Json::object();
        doc_["tolerances"] = Json::object();
        doc_["checks"] = Json::array();
        doc_["artifacts"] = Json::array();
    }

    void metric(const std::string& name, double v) {
        doc_["metrics"][name] = v;
        say(name + " = " + format_double(v));
    }
    void tolerance(const std::string& name, double v) { doc_["tolerances"][name] = v; }

    void check(const std::string& name, bool pass, double value, double bound) {
        doc_["checks"].push_back({{"name", name}, {"pass", pass}, {"value", value}, {"bound", bound}});
        failed_ = failed_ || (opt_.check && !pass);
        say(std::string("check ") + name + ": " + (pass ? "pass" : "FAIL") + " (" + format_double(value) +
            " vs " + format_double(bound) + ")");
    }

    void table(const std::string& file, const CsvTable& t) {
        std::ofstream out(fs::path(opt_.out_dir) / file, std::ios::binary);
        write_csv(out, t);
        if (!out) throw std::runtime_error("cannot write " + file);
        doc_["artifacts"].push_back(file);
    }

    void error(const std::string& kind, const std::string& message, int code) {
        doc_["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    }

    int finish(int code) {
        if (code == exit_code::ok && failed_) code = exit_code::assertion;
        doc_["exit_code"] = code;
        std::ofstream out(fs::path(opt_.out_dir) / "summary.json", std::ios::binary);
        out << doc_.dump(2) << '\n';
        return code;
    }

    const Json& doc() const { return doc_; }

private:
    void say(const std::string& line) {
        if (!opt_.quiet) log_ << line << '\n';
    }

    const Options& opt_;
    std::ostream& log_;
    Json doc_;
    bool failed_ = false;
};

SpaceGrid refined(const SpaceGrid& s) { return {s.x_min, s.x_max, 2 * s.n_x - 1}; }

double interior_max(const ValueField& a, const ValueField& b, bool lower) {
    const SpaceGrid s = a.grid().space();
    double m = lower ? INFINITY : -INFINITY;
    for (std::size_t k = 0; k <= a.grid().n_t(); ++k) {
        for (std::size_t i = 0; i < s.n_x; ++i) {
            if (!in_interior(s, i)) continue;
            const double d = b.at(k, i) - a.at(k, i);
            m = lower ? std::min(m, d) : std::max(m, d);
        }
    }
    return m;
}

void solve_classical(const RunConfig& cfg, Report& rep) {
    const auto p = make_problem(cfg);
    const auto space = make_space(cfg);
    const auto ih = solve_infinite_horizon(p, space, cfg.window, cfg.tol_tail, cfg.dt);
    rep.table("value_truncated.csv", field_table(ih.truncated));
    rep.table("value_infinite.csv", field_table(ih.window));
    rep.table("strategy_infinite.csv", strategy_table(ih.strategy));
    const auto tail = solve_discounted_tail(p, cfg.delta, 0.0, space, cfg.tol_tail, cfg.dt);
    rep.table("value_discounted.csv", field_table(tail.value));
    rep.table("strategy_discounted.csv", strategy_table(tail.strategy));

    const std::size_t n = ih.truncated.grid().n_t();
    const auto unit = [](double, double) { return 1.0; };
    const auto zero = [](double) { return 0.0; };
    const auto coarse = solve_finite_horizon(p, Grid1D(space, 0.0, ih.horizon, n), unit, zero);
    const auto fine = solve_finite_horizon(p, Grid1D(refined(space), 0.0, ih.horizon, 2 * n), unit, zero);
    const double grid_err = grid_error(field_gap(coarse.value, fine.value));

    double lowest = INFINITY;
    for (std::size_t j = 0; j < ih.truncated.values().size(); ++j) {
        lowest = std::min(lowest, ih.doubled.values()[j] - ih.truncated.values()[j]);
    }
    const double highest = interior_max(ih.truncated, ih.doubled, false);
    const double tail_mass = tail_bound(p, ih.horizon);
    rep.metric("horizon", ih.horizon);
    rep.metric("tail_bound", tail_mass);
    rep.metric("grid_error", grid_err);
    rep.metric("min_doubling_gap", lowest);
    rep.metric("max_doubling_gap", highest);
    rep.tolerance("tail", cfg.tol_tail);
    rep.check("horizon_monotone", lowest >= 0.0, lowest, 0.0);
    rep.check("truncation_bound", highest <= tail_mass + 2.0 * grid_err, highest, tail_mass + 2.0 * grid_err);
}

struct Equilibrium {
    TailSolution tail;
    EquilibriumSolution eq;
    GluedSolution glued;
};

Equilibrium solve_eq(const ProblemSpec& p, const DiscountSpec& d, double tau, const SpaceGrid& space, std::size_t n,
                     double tol) {
    auto tail = solve_discounted_tail(p, d.delta(), tau + d.T0(), space, tol, d.T0() / static_cast<double>(n));
    auto eq = solve_equilibrium_system(p, d, tau, space, n, tail);
    auto glued = glue(eq, tail, tau, d.delta());
    return {std::move(tail), std::move(eq), std::move(glued)};
}

void solve_equilibrium(const RunConfig& cfg, Report& rep) {
    const auto p = make_problem(cfg);
    const auto d = make_discount(cfg);
    const auto space = make_space(cfg);
    const auto e = solve_eq(p, d, cfg.tau, space, cfg.n_t, cfg.tol_tail);
    rep.table("theta.csv", bitime_table(e.eq.theta));
    rep.table("value_diagonal.csv", field_table(e.eq.theta.diagonal_field()));
    rep.table("strategy_equilibrium.csv", strategy_table(e.eq.strategy));
    rep.table("value_glued_tail.csv", field_table(e.glued.tail_value()));
    rep.table("strategy_glued_tail.csv", strategy_table(e.glued.tail_strategy()));

    const auto fine = solve_eq(p, d, cfg.tau, refined(space), 2 * cfg.n_t, cfg.tol_tail);
    const double grid_err = grid_error(field_gap(e.eq.theta.diagonal_field(), fine.eq.theta.diagonal_field()));

    const double scale = std::exp(d.delta() * cfg.tau);
    const std::size_t k_seam = e.tail.value.grid().time_index(e.glued.seam());
    std::vector<double> terminal(space.n_x);
    for (std::size_t i = 0; i < space.n_x; ++i) terminal[i] = scale * e.tail.value.at(k_seam, i);
    const Grid1D& g = e.eq.theta.grid();
    double worst = -INFINITY;
    for (std::size_t k = 0; k < cfg.n_t; ++k) {
        const auto pc = precommit_value(p, d, g.t(k), g.t(cfg.n_t), terminal, space, cfg.n_t - k);
        const auto diag = e.eq.theta.diagonal(k);
        for (std::size_t i = 0; i < space.n_x; ++i) worst = std::max(worst, pc.value.at(0, i) - diag[i]);
    }
    const auto left = e.glued.head_value().row(cfg.n_t);
    const auto right = e.glued.tail_value().row(0);
    double seam_gap = 0.0;
    for (std::size_t i = 0; i < space.n_x; ++i) seam_gap = std::max(seam_gap, std::abs(left[i] - right[i]));

    rep.metric("theta_at_x0", e.glued.value(cfg.tau, cfg.x0));
    rep.metric("grid_error", grid_err);
    rep.metric("sandwich_violation", worst);
    rep.metric("seam_gap", seam_gap);
    rep.tolerance("tail", cfg.tol_tail);
    rep.check("seam_continuity", seam_gap == 0.0, seam_gap, 0.0);
    rep.check("sandwich", worst <= 2.0 * grid_err, worst, 2.0 * grid_err);
}

CsvTable path_summary(const PathBatch& b) {
    CsvTable t{{"t", "mean", "std"}, {}};
    for (std::size_t k = 0; k <= b.n_steps(); ++k) {
        std::vector<double> xs;
        for (std::size_t i = 0; i < b.n_paths(); ++i) {
            if (!b.flagged(i)) xs.push_back(b.x(i, k));
        }
        const double n = static_cast<double>(xs.size());
        const double mean = n > 0 ? pairwise_sum(xs) / n : 0.0;
        for (double& x : xs) x = (x - mean) * (x - mean);
        const double sd = n > 1 ? std::sqrt(pairwise_sum(xs) / (n - 1.0)) : 0.0;
        t.rows.push_back({b.t(k), mean, sd});
    }
    return t;
}

void simulate(const RunConfig& cfg, Report& rep) {
    const auto p = make_problem(cfg);
    const auto d = make_discount(cfg);
    const auto space = make_space(cfg);
    const auto e = solve_eq(p, d, cfg.tau, space, cfg.n_t, cfg.tol_tail);
    const auto fine = solve_eq(p, d, cfg.tau, refined(space), 2 * cfg.n_t, cfg.tol_tail);
    const auto batch = simulate_feedback(p, e.glued, cfg.tau, cfg.x0, cfg.step, e.glued.horizon(), cfg.n_paths,
                                         cfg.seed, guard_for(space));
    rep.table("paths.csv", path_summary(batch));
    const auto est = mc_cost(batch, d, cfg.tau, p.base_cost);
    const double pde = e.glued.value(cfg.tau, cfg.x0);
    const double grid_tol = 2.0 * std::abs(fine.glued.value(cfg.tau, cfg.x0) - pde);
    const double bound = cfg.mc_sigma * est.std_error + grid_tol;
    rep.metric("mc_mean", est.mean);
    rep.metric("mc_std_error", est.std_error);
    rep.metric("paths_used", static_cast<double>(est.n_used));
    rep.metric("paths_flagged", static_cast<double>(est.n_flagged));
    rep.metric("pde_value", pde);
    rep.metric("grid_tolerance", grid_tol);
    rep.tolerance("mc_sigma", cfg.mc_sigma);
    rep.check("mc_matches_pde", std::abs(est.mean - pde) <= bound, std::abs(est.mean - pde), bound);
}

void naive_compare(const RunConfig& cfg, Report& rep) {
    const auto p = make_problem(cfg);
    const auto d = make_discount(cfg);
    const auto space = make_space(cfg);
    const auto naive = naive_agent(p, d, cfg.t0, cfg.x0, cfg.revision_interval, cfg.step, cfg.n_paths, cfg.seed,
                                   NaiveSettings{space, cfg.tol_tail});
    CsvTable revisions{{"time", "deviation"}, {}};
    for (const auto& r : naive.revisions) revisions.rows.push_back({r.time, r.deviation});
    rep.table("revisions.csv", revisions);

    // Equilibrium played over the same window, valued by the same t0-self functional.
    const auto n = static_cast<std::size_t>(std::llround(d.T0() / cfg.step));
    const auto e = solve_eq(p, d, cfg.t0, space, n, cfg.tol_tail);
    const double seam = e.glued.seam();
    const auto batch = simulate_feedback(p, e.glued, cfg.t0, cfg.x0, cfg.step, seam, cfg.n_paths, cfg.seed,
                                         guard_for(space));
    const ValueField& tv = e.tail.value;
    const auto eq_cost = mc_cost(batch, d, cfg.t0, p.base_cost, [&tv](double x) { return tv.interpolate(0, x); },
                                 std::exp(d.delta() * cfg.t0));
    rep.table("costs.csv", CsvTable{{"equilibrium_mean", "equilibrium_std_error", "naive_mean", "naive_std_error"},
                                    {{eq_cost.mean, eq_cost.std_error, naive.cost.mean, naive.cost.std_error}}});
    rep.metric("plans", static_cast<double>(naive.plans()));
    rep.metric("max_plan_deviation", naive.max_deviation());
    rep.metric("naive_cost", naive.cost.mean);
    rep.metric("naive_std_error", naive.cost.std_error);
    rep.metric("equilibrium_cost", eq_cost.mean);
    rep.metric("equilibrium_std_error", eq_cost.std_error);
    if (d.kind() == DiscountSpec::Kind::exponential) {
        rep.check("exponential_no_revision", naive.max_deviation() == 0.0, naive.max_deviation(), 0.0);
    }
}

void recursive_check(const RunConfig& cfg, Report& rep) {
    const auto p = make_problem(cfg);
    const auto space = make_space(cfg);
    const double head_rate = cfg.head_rate < 0.0 ? 0.5 * cfg.delta : cfg.head_rate;
    const auto spec = RecursiveCostSpec::catalog(p, cfg.delta, cfg.T0, head_rate);
    const auto tail = solve_discounted_tail(p, cfg.delta, cfg.t0, space, cfg.tol_tail, cfg.dt);
    const TablePolicy policy(tail.strategy);

    // Variation of constants along one simulated path at step 1e-3.
    const double h = 1e-3;
    const double end = cfg.t0 + std::ceil(cfg.window / h) * h;
    const auto path = simulate_feedback(p, policy, cfg.t0, cfg.x0, h, end, 1, cfg.seed, guard_for(space));
    SamplePath sp{cfg.t0, h, {}, {}};
    for (std::size_t k = 0; k <= path.n_steps(); ++k) {
        sp.x.push_back(path.x(0, k));
        sp.u.push_back(path.u(0, k));
    }
    const double reduction = tail_reduction_check(spec, sp, cfg.t0);
    rep.metric("tail_reduction_residual", reduction);
    rep.tolerance("reduction", cfg.tol_reduction);
    rep.check("tail_reduction", reduction <= cfg.tol_reduction, reduction, cfg.tol_reduction);

    // Coarsest level: a step dividing T0, no larger than grid.dt, that needs no CFL substeps. With
    // substeps two levels could share one effective step and hide the step dependence.
    const auto n_head = std::max(static_cast<std::size_t>(std::ceil(cfg.T0 / cfg.dt - 1e-9)),
                                 cfl_time_steps(p, space, cfg.t0, cfg.t0 + cfg.T0));
    const double dt0 = cfg.T0 / static_cast<double>(n_head);
    CsvTable levels{{"dt", "residual", "anchor_value_x0"}, {}};
    std::vector<double> res;
    std::vector<std::vector<double>> anchors;
    for (int l = 0; l < 3; ++l) {
        const double dt = dt0 / std::ldexp(1.0, l);
        const auto r = decomposition_check(p, spec, policy, cfg.t0, cfg.x0, space, dt, cfg.tol_tail);
        anchors.push_back(recursive_cost_field(p, spec, policy, cfg.t0, space, dt, cfg.tol_tail).anchor_values);
        res.push_back(r.sup_residual);
        levels.rows.push_back({dt, r.sup_residual, r.decomposed_at_x0});
    }
    rep.table("decomposition.csv", levels);
    double gap = 0.0;
    for (std::size_t i = 0; i < space.n_x; ++i) gap = std::max(gap, std::abs(anchors[0][i] - anchors[1][i]));
    const double step_err = grid_error(gap);
    rep.metric("decomposition_residual", res[0]);
    rep.metric("step_error", step_err);
    rep.check("decomposition", res[0] <= 2.0 * step_err, res[0], 2.0 * step_err);
    const double ratio = std::max(res[1] / res[0], res[2] / res[1]);
    rep.check("decomposition_halving", ratio <= 0.5, ratio, 0.5);
}

void convergence_study(const RunConfig& cfg, Report& rep) {
    const auto p = make_problem(cfg);
    const auto base = make_space(cfg);
    const auto n0 = static_cast<std::size_t>(std::ceil(cfg.window / cfg.dt - 1e-9));
    std::vector<double> steps, values;
    for (std::size_t l = 0; l < cfg.levels; ++l) {
        const std::size_t scale = std::size_t{1} << l;
        const SpaceGrid s{base.x_min, base.x_max, (base.n_x - 1) * scale + 1};
        const Grid1D g(s, 0.0, cfg.window, n0 * scale);
        const auto sol = solve_finite_horizon(p, g, [](double, double) { return 1.0; }, [](double) { return 0.0; });
        steps.push_back(g.dt());
        values.push_back(sol.value.interpolate(0, cfg.x0));
    }
    const auto t = refinement_table(steps, values);
    CsvTable out{{"dt", "dx", "value"}, {}};
    for (std::size_t l = 0; l < steps.size(); ++l) {
        out.rows.push_back({steps[l], (base.x_max - base.x_min) / static_cast<double>((base.n_x - 1) << l), values[l]});
    }
    rep.table("refinement.csv", out);
    CsvTable orders{{"dt", "difference", "order"}, {}};
    for (std::size_t l = 0; l < t.differences.size(); ++l) {
        orders.rows.push_back({steps[l], t.differences[l], l < t.orders.size() ? t.orders[l] : 0.0});
    }
    rep.table("orders.csv", orders);

    // Least-squares slope of log difference against log step.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t l = 0; l < t.differences.size(); ++l) {
        if (!(t.differences[l] > 0.0)) continue;
        const double x = std::log(steps[l]), y = std::log(t.differences[l]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++m;
    }
    const double fitted = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
    rep.metric("fitted_order", fitted);
    rep.metric("finest_value", values.back());
    bool shrinking = true;
    for (std::size_t l = 1; l < t.differences.size(); ++l) shrinking = shrinking && t.differences[l] <= t.differences[l - 1];
    rep.check("differences_shrink", shrinking, t.differences.back(), t.differences.front());
}

const std::map<std::string, std::function<void(const RunConfig&, Report&)>>& registry() {
    static const std::map<std::string, std::function<void(const RunConfig&, Report&)>> table = {
        {"solve-classical", solve_classical}, {"solve-equilibrium", solve_equilibrium},
        {"simulate", simulate},               {"naive-compare", naive_compare},
        {"recursive-check", recursive_check}, {"convergence-study", convergence_study},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, fn] : registry()) v.push_back(name);
        return v;
    }();
    return names;
}

int run_command(const std::string& name, const RunConfig& cfg, const Options& opt, std::ostream& log) {
    const auto it = registry().find(name);
    if (it == registry().end()) {
        log << "unknown command '" << name << "'\n";
        return exit_code::parse;
    }
    fs::create_directories(opt.out_dir);
    Report rep(cfg, opt, name, log);
    int code = exit_code::ok;
    const auto fail = [&](const char* kind, const std::string& what, int c) {
        rep.error(kind, what, c);
        log << Json{{"error", kind}, {"message", what}, {"exit_code", c}}.dump() << '\n';
        code = c;
    };
    try {
        const auto report = validate_problem(make_problem(cfg), make_discount(cfg), 2000);
        if (!report.ok()) {
            std::string what;
            for (const auto& v : report.violations) what += to_string(v.kind) + ": " + v.message + "; ";
            throw ValidationError(what);
        }
        it->second(cfg, rep);
    } catch (const StabilityError& e) {
        fail("stability", e.what(), exit_code::stability);
    } catch (const GuardError& e) {
        fail("guard", e.what(), exit_code::stability);
    } catch (const ValidationError& e) {
        fail("validation", e.what(), exit_code::validation);
    } catch (const Error& e) {
        fail("validation", e.what(), exit_code::validation);
    }
    return rep.finish(code);
}

}  // namespace equihor::cli

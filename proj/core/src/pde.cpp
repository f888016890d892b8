#include "equihor/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "equihor/errors.hpp"

namespace equihor {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_x, double t_start, double t_end, std::size_t n_t)
    : x_min_(x_min), x_max_(x_max), n_x_(n_x), t_start_(t_start), t_end_(t_end), n_t_(n_t) {
    if (!(x_min < x_max)) throw DomainError("grid needs x_min < x_max");
    if (n_x < 3) throw DomainError("grid needs at least 3 space points");
    if (n_t < 1) throw DomainError("grid needs at least one time step");
    if (!(t_end > t_start)) throw DomainError("grid needs t_end > t_start");
    dx_ = (x_max - x_min) / static_cast<double>(n_x - 1);
    dt_ = (t_end - t_start) / static_cast<double>(n_t);
}

Grid1D::Grid1D(const SpaceGrid& space, double t_start, double t_end, std::size_t n_t)
    : Grid1D(space.x_min, space.x_max, space.n_x, t_start, t_end, n_t) {}

std::size_t Grid1D::nearest_time(double t) const noexcept {
    const double pos = (t - t_start_) / dt_;
    if (!(pos > 0.0)) return 0;
    const auto k = static_cast<std::size_t>(std::llround(pos));
    return std::min(k, n_t_);
}

std::size_t Grid1D::time_index(double t) const {
    const std::size_t k = nearest_time(t);
    if (std::abs(this->t(k) - t) > 1e-9 * dt_) {
        std::ostringstream os;
        os << "time " << t << " is not a node of the grid on [" << t_start_ << ", " << t_end_ << "]";
        throw DomainError(os.str());
    }
    return k;
}

ValueField::ValueField(Grid1D grid) : grid_(grid), values_((grid.n_t() + 1) * grid.n_x(), 0.0) {}

UpwindGradient upwind_gradient(std::span<const double> v, double dx, std::size_t i) noexcept {
    const std::size_t n = v.size();
    if (i == 0) {
        const double d = (v[1] - v[0]) / dx;
        return {d, d};
    }
    if (i + 1 == n) {
        const double d = (v[n - 1] - v[n - 2]) / dx;
        return {d, d};
    }
    return {(v[i + 1] - v[i]) / dx, (v[i] - v[i - 1]) / dx};
}

double second_difference(std::span<const double> v, double dx, std::size_t i) noexcept {
    if (i == 0 || i + 1 == v.size()) return 0.0;
    return (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
}

double ValueField::upwind_derivative(std::size_t k, std::size_t i, double drift) const noexcept {
    const auto g = upwind_gradient(row(k), grid_.dx(), i);
    return drift >= 0.0 ? g.forward : g.backward;
}

double ValueField::second_derivative(std::size_t k, std::size_t i) const noexcept {
    return second_difference(row(k), grid_.dx(), i);
}

double ValueField::interpolate(std::size_t k, double x) const noexcept {
    return interpolate_row(row(k), grid_.space(), x);
}

double interpolate_row(std::span<const double> v, const SpaceGrid& space, double x) noexcept {
    const double pos = (x - space.x_min) / space.dx();
    if (!(pos > 0.0)) return v.front();
    if (pos >= static_cast<double>(v.size() - 1)) return v.back();
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * v[i] + w * v[i + 1];
}

StrategyTable::StrategyTable(Grid1D grid) : grid_(grid), controls_((grid.n_t() + 1) * grid.n_x(), 0.0) {}

double StrategyTable::lookup(double t, double x) const noexcept {
    const auto u = row(grid_.nearest_time(t));
    const double pos = (x - grid_.x_min()) / grid_.dx();
    if (!(pos > 0.0)) return u.front();
    if (pos >= static_cast<double>(u.size() - 1)) return u.back();
    const auto i = static_cast<std::size_t>(pos);
    if (u[i] == u[i + 1]) return u[i];
    return pos - static_cast<double>(i) < 0.5 ? u[i] : u[i + 1];
}

double cfl_bound(const ProblemSpec& p, const Grid1D& grid) {
    double max_sig2 = 0.0;
    double max_drift = 0.0;
    for (std::size_t k = 0; k <= grid.n_t(); ++k) {
        const double t = grid.t(k);
        for (std::size_t i = 0; i < grid.n_x(); ++i) {
            const double x = grid.x(i);
            for (double u : p.controls) {
                const double s = p.diffusion(t, x, u);
                max_sig2 = std::max(max_sig2, s * s);
                max_drift = std::max(max_drift, std::abs(p.drift(t, x, u)));
            }
        }
    }
    const double dx = grid.dx();
    const double denom = max_sig2 + max_drift * dx;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return 0.9 * dx * dx / denom;
}

std::size_t cfl_steps(const ProblemSpec& p, const Grid1D& grid) {
    const double bound = cfl_bound(p, grid);
    if (std::isinf(bound)) return 1;
    const double dt = grid.dt();
    auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(dt / bound)));
    while (dt / static_cast<double>(m) > bound) ++m;
    while (m > 1 && dt / static_cast<double>(m - 1) <= bound) --m;
    return m;
}

std::size_t cfl_time_steps(const ProblemSpec& p, const SpaceGrid& space, double t_start, double t_end) {
    const double bound = cfl_bound(p, Grid1D(space, t_start, t_end, 1));
    if (std::isinf(bound)) return 1;
    auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((t_end - t_start) / bound)));
    while (cfl_steps(p, Grid1D(space, t_start, t_end, n)) > 1) ++n;
    return n;
}

namespace {

struct Coefficients {
    double drift;
    double sig2;
    double cost;
};

// c0 v_i + c+ v_{i+1} + c- v_{i-1} + h cost with nonnegative weights under the CFL bound.
inline double monotone_update(std::span<const double> v, std::size_t i, double h, double dx,
                              const Coefficients& c) noexcept {
    const double diff = 0.5 * c.sig2 / (dx * dx);
    const double up = h * ((c.drift > 0.0 ? c.drift / dx : 0.0) + diff);
    const double down = h * ((c.drift < 0.0 ? -c.drift / dx : 0.0) + diff);
    const double centre = 1.0 - up - down;
    return centre * v[i] + up * v[i + 1] + down * v[i - 1] + h * c.cost;
}

inline void extrapolate_boundary(std::vector<double>& v) noexcept {
    const std::size_t n = v.size();
    v[0] = 2.0 * v[1] - v[2];
    v[n - 1] = 2.0 * v[n - 2] - v[n - 3];
}

void check_finite(const std::vector<double>& v, double t) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            std::ostringstream os;
            os << "backward step blew up at t = " << t << ", space index " << i;
            throw StabilityError(os.str(), t, i);
        }
    }
}

void check_sizes(const Grid1D& grid, std::span<const double> next) {
    if (next.size() != grid.n_x()) throw DomainError("slice length does not match the grid");
}

}  // namespace

BackwardStepper::BackwardStepper(const ProblemSpec& p, const Grid1D& grid, TimeScheme scheme)
    : BackwardStepper(p, grid, cfl_steps(p, grid), scheme) {}

BackwardStepper::BackwardStepper(const ProblemSpec& p, const Grid1D& grid, std::size_t substeps, TimeScheme scheme)
    : p_(&p), grid_(grid), substeps_(std::max<std::size_t>(1, substeps)), scheme_(scheme) {
    if (p.controls.empty()) throw DomainError("control grid must be nonempty");
}

StrategySlice BackwardStepper::feedback(std::span<const double> values, double t, const CostRate& cost) const {
    check_sizes(grid_, values);
    const double dx = grid_.dx();
    StrategySlice u(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        u[i] = argmin_control(*p_, t, grid_.x(i), upwind_gradient(values, dx, i),
                              second_difference(values, dx, i), cost);
    }
    return u;
}

StepResult BackwardStepper::hjb(std::span<const double> next, double t_k, const CostRate& cost) const {
    check_sizes(grid_, next);
    const std::size_t n = grid_.n_x();
    const double dx = grid_.dx();
    const double h = grid_.dt() / static_cast<double>(substeps_);
    const auto& controls = p_->controls;

    StepResult out;
    out.controls.assign(n, 0.0);
    std::vector<double> cur(next.begin(), next.end());
    std::vector<double> nxt(n);
    for (std::size_t j = substeps_; j-- > 0;) {
        const double t_up = t_k + h * static_cast<double>(j + 1);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double x = grid_.x(i);
            const UpwindGradient g = upwind_gradient(cur, dx, i);
            const double hess = second_difference(cur, dx, i);
            Coefficients best{};
            double best_h = std::numeric_limits<double>::infinity();
            double best_u = controls.front();
            for (double u : controls) {
                const double sig = p_->diffusion(t_up, x, u);
                const Coefficients c{p_->drift(t_up, x, u), sig * sig, cost(t_up, x, u)};
                const double ham = (c.drift >= 0.0 ? g.forward : g.backward) * c.drift + 0.5 * c.sig2 * hess + c.cost;
                if (ham < best_h) {
                    best_h = ham;
                    best = c;
                    best_u = u;
                }
            }
            nxt[i] = monotone_update(cur, i, h, dx, best);
            if (j + 1 == substeps_) out.controls[i] = best_u;
        }
        if (j + 1 == substeps_) {
            for (std::size_t i : {std::size_t{0}, n - 1}) {
                out.controls[i] = argmin_control(*p_, t_up, grid_.x(i), upwind_gradient(cur, dx, i), 0.0, cost);
            }
        }
        extrapolate_boundary(nxt);
        check_finite(nxt, t_up - h);
        cur.swap(nxt);
    }
    out.values = std::move(cur);
    return out;
}

std::vector<double> BackwardStepper::fixed_control(std::span<const double> next, double t_k,
                                                   std::span<const double> controls, const Rate& rate) const {
    check_sizes(grid_, next);
    check_sizes(grid_, controls);
    const std::size_t n = grid_.n_x();
    const double dx = grid_.dx();
    const double h = grid_.dt() / static_cast<double>(substeps_);
    std::vector<double> cur(next.begin(), next.end());
    std::vector<double> stage(n), nxt(n);
    const auto euler = [&](const std::vector<double>& from, std::vector<double>& to, double t) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double x = grid_.x(i);
            const double u = controls[i];
            const double sig = p_->diffusion(t, x, u);
            to[i] = monotone_update(from, i, h, dx, {p_->drift(t, x, u), sig * sig, rate(t, x, u, from[i])});
        }
        extrapolate_boundary(to);
    };
    for (std::size_t j = substeps_; j-- > 0;) {
        const double t_up = t_k + h * static_cast<double>(j + 1);
        if (scheme_ == TimeScheme::euler) {
            euler(cur, nxt, t_up);
        } else {
            euler(cur, stage, t_up);
            euler(stage, nxt, t_up - h);
            for (std::size_t i = 0; i < n; ++i) nxt[i] = 0.5 * (cur[i] + nxt[i]);
        }
        check_finite(nxt, t_up - h);
        cur.swap(nxt);
    }
    return cur;
}

std::vector<double> BackwardStepper::linear(std::span<const double> next, double t_k,
                                            std::span<const double> controls, const CostRate& cost) const {
    return fixed_control(next, t_k, controls, [&cost](double t, double x, double u, double) { return cost(t, x, u); });
}

std::vector<double> BackwardStepper::semilinear(std::span<const double> next, double t_k,
                                                std::span<const double> controls, const Generator& gen) const {
    return fixed_control(next, t_k, controls, gen);
}

CostRate weighted_cost(const ProblemSpec& p, WeightFn weight) {
    return [&p, w = std::move(weight)](double t, double x, double u) { return w(t, x) * p.base_cost(t, x, u); };
}

CostRate time_weighted_cost(const ProblemSpec& p, TimeMap weight) {
    return [&p, w = std::move(weight)](double t, double x, double u) { return w(t) * p.base_cost(t, x, u); };
}

StepResult hjb_step(const ProblemSpec& p, const Grid1D& grid, std::span<const double> next_slice, double t_k,
                    const WeightFn& weight) {
    const BackwardStepper stepper(p, grid);
    return stepper.hjb(next_slice, t_k, weighted_cost(p, weight));
}

std::vector<double> linear_step(const ProblemSpec& p, const Grid1D& grid, std::span<const double> next_slice,
                                double t_k, std::span<const double> control_slice, const TimeMap& weight) {
    for (double u : control_slice) {
        if (!std::binary_search(p.controls.begin(), p.controls.end(), u)) {
            throw DomainError("control slice holds a value off the control grid");
        }
    }
    const BackwardStepper stepper(p, grid);
    return stepper.linear(next_slice, t_k, control_slice, time_weighted_cost(p, weight));
}

StrategyTable tabulate(const FeedbackPolicy& policy, const Grid1D& grid) {
    StrategyTable out(grid);
    for (std::size_t k = 0; k <= grid.n_t(); ++k) {
        const double t = grid.t(k);
        auto row = out.row(k);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = policy.control(t, grid.x(i));
    }
    return out;
}

}  // namespace equihor

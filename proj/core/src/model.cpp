#include "equihor/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "equihor/errors.hpp"
#include "equihor/rng.hpp"

namespace equihor {

DiscountSpec::DiscountSpec(Kind kind, double delta, double T0, double k, TimeMap head)
    : kind_(kind), delta_(delta), T0_(T0), k_(k), head_(std::move(head)) {
    if (!(delta > 0.0)) throw DomainError("discount rate delta must be positive");
    if (!(T0 >= 0.0)) throw DomainError("T0 must be nonnegative");
}

DiscountSpec DiscountSpec::exponential(double delta, double T0) {
    return DiscountSpec(Kind::exponential, delta, T0, 0.0,
                        [delta](double tau) { return std::exp(-delta * tau); });
}

DiscountSpec DiscountSpec::matched_hyperbolic(double delta, double T0) {
    // k -> delta as T0 -> 0.
    const double k = T0 > 0.0 ? std::expm1(delta * T0) / T0 : delta;
    return DiscountSpec(Kind::matched_hyperbolic, delta, T0, k,
                        [k](double tau) { return 1.0 / (1.0 + k * tau); });
}

DiscountSpec DiscountSpec::custom(double delta, double T0, TimeMap head) {
    if (!head) throw DomainError("custom discount needs a head function");
    return DiscountSpec(Kind::custom, delta, T0, 0.0, std::move(head));
}

double DiscountSpec::head(double tau) const { return head_(tau); }

double DiscountSpec::operator()(double tau) const {
    if (!(tau >= 0.0)) throw DomainError("discount evaluated at negative time");
    return tau < T0_ ? head_(tau) : std::exp(-delta_ * tau);
}

double discount_eval(const DiscountSpec& d, double tau) { return d(tau); }

std::vector<double> symmetric_controls(double u_max, std::size_t n) {
    if (n == 0) throw DomainError("control grid must be nonempty");
    if (n == 1) return {0.0};
    if (!(u_max > 0.0)) throw DomainError("u_max must be positive");
    std::vector<double> u(n);
    const double span = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        // Mirror-symmetric construction so u[i] == -u[n-1-i] bitwise.
        const double j = static_cast<double>(i) - 0.5 * span;
        u[i] = u_max * (2.0 * j / span);
    }
    return u;
}

ProblemSpec catalog_problem(const CatalogParams& q) {
    if (!(q.u_max > 0.0)) throw DomainError("u_max must be positive");
    if (q.a < 0.0 || q.c < 0.0) throw DomainError("cost weights must be nonnegative");
    if (q.rho < 0.0) throw DomainError("rho must be nonnegative");

    ProblemSpec p;
    p.name = "catalog";
    p.drift = [q](double, double x, double u) { return q.beta0 + q.beta1 * std::tanh(x) + q.beta2 * u; };
    p.diffusion = [q](double, double x, double) { return q.sigma0 + q.sigma1 * std::tanh(x); };
    p.base_cost = [q](double s, double x, double u) {
        const double th = std::tanh(x - q.x_star);
        const double v = u / q.u_max;
        return std::exp(-q.rho * s) * (q.a * th * th + q.c * v * v);
    };
    const double scale = q.a + q.c;
    p.cost_bound = [q, scale](double s) { return scale * std::exp(-q.rho * s); };
    if (q.rho > 0.0) {
        p.cost_tail = [q, scale](double T) { return scale * std::exp(-q.rho * T) / q.rho; };
    } else if (scale == 0.0) {
        p.cost_tail = [](double) { return 0.0; };
    }
    p.cost_sup = scale;
    p.controls = symmetric_controls(q.u_max, q.n_controls);
    p.epsilon = q.epsilon;
    return p;
}

double running_cost(const ProblemSpec& p, const DiscountSpec& d, double rho, double s, double x,
                    double u) {
    if (p.two_time_cost) return p.two_time_cost(rho, s, x, u);
    return d(s - rho) * p.base_cost(s, x, u);
}

namespace {

void require_on_grid(const ProblemSpec& p, double u) {
    if (!std::binary_search(p.controls.begin(), p.controls.end(), u)) {
        std::ostringstream os;
        os << "control " << u << " is not on the control grid";
        throw DomainError(os.str());
    }
}

template <class Eval>
double scan_argmin(const std::vector<double>& controls, Eval&& eval) {
    if (controls.empty()) throw DomainError("control grid must be nonempty");
    double best_u = controls.front();
    double best = eval(best_u);
    for (std::size_t k = 1; k < controls.size(); ++k) {
        const double h = eval(controls[k]);
        if (h < best) {
            best = h;
            best_u = controls[k];
        }
    }
    return best_u;
}

}  // namespace

double hamiltonian(const ProblemSpec& p, double t, double x, double u, double grad, double hess,
                   double weight) {
    require_on_grid(p, u);
    if (!(weight >= 0.0)) throw DomainError("Hamiltonian weight must be nonnegative");
    const double sig = p.diffusion(t, x, u);
    return grad * p.drift(t, x, u) + 0.5 * (sig * sig) * hess + weight * p.base_cost(t, x, u);
}

double argmin_control(const ProblemSpec& p, double t, double x, double grad, double hess,
                      double weight) {
    return scan_argmin(p.controls, [&](double u) {
        const double sig = p.diffusion(t, x, u);
        return grad * p.drift(t, x, u) + 0.5 * (sig * sig) * hess + weight * p.base_cost(t, x, u);
    });
}

double argmin_control(const ProblemSpec& p, double t, double x, UpwindGradient grad, double hess,
                      double weight) {
    return scan_argmin(p.controls, [&](double u) {
        const double b = p.drift(t, x, u);
        const double sig = p.diffusion(t, x, u);
        const double g = b >= 0.0 ? grad.forward : grad.backward;
        return g * b + 0.5 * (sig * sig) * hess + weight * p.base_cost(t, x, u);
    });
}

double argmin_control(const ProblemSpec& p, double t, double x, UpwindGradient grad, double hess,
                      const CostRate& cost) {
    return scan_argmin(p.controls, [&](double u) {
        const double b = p.drift(t, x, u);
        const double sig = p.diffusion(t, x, u);
        const double g = b >= 0.0 ? grad.forward : grad.backward;
        return g * b + 0.5 * (sig * sig) * hess + cost(t, x, u);
    });
}

double tail_bound(const ProblemSpec& p, double T) {
    if (!(T >= 0.0)) throw DomainError("tail bound needs T >= 0");
    if (!p.cost_tail) throw UnsupportedProblem("problem has no closed-form tail integral");
    return p.cost_tail(T);
}

bool ValidationReport::has(Violation::Kind kind) const noexcept {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

std::string to_string(Violation::Kind kind) {
    switch (kind) {
        case Violation::Kind::control_grid: return "control_grid";
        case Violation::Kind::non_degeneracy: return "non_degeneracy";
        case Violation::Kind::cost_range: return "cost_range";
        case Violation::Kind::discount_origin: return "discount_origin";
        case Violation::Kind::discount_monotone: return "discount_monotone";
        case Violation::Kind::splice: return "splice";
        case Violation::Kind::tail_map: return "tail_map";
        case Violation::Kind::two_time_tail: return "two_time_tail";
    }
    return "unknown";
}

namespace {

constexpr double kSpliceTol = 1e-12;
constexpr double kTwoTimeTol = 1e-10;

double simpson(const TimeMap& f, double a, double b, std::size_t n) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double sum = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) sum += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace

ValidationReport validate_problem(const ProblemSpec& p, const DiscountSpec& d,
                                  std::size_t sample_budget, const SampleBox& box) {
    if (sample_budget == 0) throw DomainError("sample budget must be positive");
    ValidationReport report;
    auto add = [&report](Violation::Kind kind, std::string msg) {
        // One entry per kind keeps reports readable.
        if (!report.has(kind)) report.violations.push_back({kind, std::move(msg)});
    };

    if (p.controls.empty()) {
        add(Violation::Kind::control_grid, "control grid is empty");
        return report;
    }
    for (std::size_t k = 1; k < p.controls.size(); ++k) {
        if (!(p.controls[k] > p.controls[k - 1])) {
            add(Violation::Kind::control_grid, "control grid is not strictly ascending");
        }
    }

    const CounterRng rng(box.seed);
    for (std::size_t n = 0; n < sample_budget; ++n) {
        const double s = box.s_max * rng.uniform(0, n);
        const double x = box.x_min + (box.x_max - box.x_min) * rng.uniform(1, n);
        const auto iu = static_cast<std::size_t>(rng.uniform(2, n) * static_cast<double>(p.controls.size()));
        const double u = p.controls[std::min(iu, p.controls.size() - 1)];

        const double sig = p.diffusion(s, x, u);
        if (!(sig * sig >= p.epsilon)) {
            std::ostringstream os;
            os << "sigma^2 = " << sig * sig << " < epsilon = " << p.epsilon << " at (s, x, u) = (" << s
               << ", " << x << ", " << u << ")";
            add(Violation::Kind::non_degeneracy, os.str());
        }

        const double phi = p.cost_bound ? p.cost_bound(s) : std::numeric_limits<double>::infinity();
        const double slack = 1e-12 * std::max(1.0, std::abs(phi));
        const double rho = s * rng.uniform(3, n);
        const double g0 = p.base_cost(s, x, u);
        const double g = running_cost(p, d, rho, s, x, u);
        if (!(g0 >= 0.0 && g0 <= phi + slack) || !(g >= 0.0 && g <= phi + slack)) {
            std::ostringstream os;
            os << "running cost outside [0, phi(s)] at (rho, s, x, u) = (" << rho << ", " << s << ", " << x
               << ", " << u << ")";
            add(Violation::Kind::cost_range, os.str());
        }

        if (p.two_time_cost) {
            // Points with s - rho >= T0 must carry the exponential discount.
            const double lag = d.T0() + 5.0 * rng.uniform(4, n);
            const double r0 = std::max(0.0, s - lag);
            const double s0 = r0 + lag;
            const double want = std::exp(-d.delta() * (s0 - r0)) * p.base_cost(s0, x, u);
            const double got = p.two_time_cost(r0, s0, x, u);
            if (!(std::abs(got - want) <= kTwoTimeTol)) {
                std::ostringstream os;
                os << "two-time cost differs from exp(-delta (s - rho)) g0 by " << std::abs(got - want)
                   << " at rho = " << r0 << ", s = " << s0;
                add(Violation::Kind::two_time_tail, os.str());
            }
        }
    }

    if (std::abs(d.head(0.0) - 1.0) > kSpliceTol) {
        add(Violation::Kind::discount_origin, "lambda(0) != 1");
    }
    const double T0 = d.T0();
    const std::size_t n_lambda = std::clamp<std::size_t>(sample_budget, 16, 4096);
    const double span = T0 + 5.0;
    double prev = d(0.0);
    for (std::size_t i = 1; i <= n_lambda; ++i) {
        const double tau = span * static_cast<double>(i) / static_cast<double>(n_lambda);
        const double cur = d(tau);
        if (!(cur < prev) || !(cur > 0.0)) {
            std::ostringstream os;
            os << "lambda is not strictly decreasing and positive near tau = " << tau;
            add(Violation::Kind::discount_monotone, os.str());
        }
        prev = cur;
    }
    const double splice_gap = std::abs(d.head(T0) - std::exp(-d.delta() * T0));
    if (splice_gap > kSpliceTol) {
        std::ostringstream os;
        os << "head(T0) differs from exp(-delta T0) by " << splice_gap;
        add(Violation::Kind::splice, os.str());
    }

    if (p.cost_tail) {
        double prev_tail = p.cost_tail(0.0);
        for (int i = 1; i <= 64; ++i) {
            const double T = box.s_max * i / 16.0;
            const double cur = p.cost_tail(T);
            if (!(cur <= prev_tail) || !(cur >= 0.0)) {
                add(Violation::Kind::tail_map, "tail integral is not nonincreasing and nonnegative");
            }
            prev_tail = cur;
        }
        if (p.cost_bound) {
            const double head = simpson(p.cost_bound, 0.0, box.s_max, 2000);
            const double closed = p.cost_tail(0.0) - p.cost_tail(box.s_max);
            if (std::abs(head - closed) > 1e-6 * std::max(1.0, std::abs(head))) {
                add(Violation::Kind::tail_map, "tail map disagrees with quadrature of the cost envelope");
            }
        }
        const double far = p.cost_tail(1e3 * std::max(1.0, box.s_max));
        if (!(far <= 1e-3 * std::max(p.cost_tail(0.0), 1e-300))) {
            add(Violation::Kind::tail_map, "tail integral does not vanish at large T");
        }
    }
    return report;
}

}  // namespace equihor

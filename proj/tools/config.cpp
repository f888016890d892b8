#include "config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "equihor/errors.hpp"

namespace equihor::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char ch : s) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) return false;
    }
    return s.front() != '.' && s.back() != '.' && s.find("..") == std::string::npos;
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

Value parse_value(const std::string& raw, const std::string& key, int line) {
    if (raw.empty()) throw ParseError("missing value for '" + key + "'", key, line);
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') throw ParseError("unterminated string for '" + key + "'", key, line);
        const std::string body = raw.substr(1, raw.size() - 2);
        if (body.find('"') != std::string::npos || body.find('\\') != std::string::npos) {
            throw ParseError("escapes are not supported in '" + key + "'", key, line);
        }
        return body;
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    std::string digits;
    for (char ch : raw) {
        if (ch != '_') digits += ch;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(digits, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != digits.size() || !std::isfinite(v)) {
        throw ParseError("cannot parse value '" + raw + "' for '" + key + "'", key, line);
    }
    return v;
}

double as_number(const Value& v, const std::string& key) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw ParseError("'" + key + "' must be a number", key);
}

std::string as_string(const Value& v, const std::string& key) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw ParseError("'" + key + "' must be a string", key);
}

std::uint64_t as_count(const Value& v, const std::string& key) {
    const double d = as_number(v, key);
    if (d < 0.0 || d != std::floor(d) || d > 9007199254740992.0) {
        throw ParseError("'" + key + "' must be a nonnegative integer", key);
    }
    return static_cast<std::uint64_t>(d);
}

using Setter = std::function<void(RunConfig&, const Value&, const std::string&)>;

Setter number(double RunConfig::*field) {
    return [field](RunConfig& c, const Value& v, const std::string& k) { c.*field = as_number(v, k); };
}

Setter param(double CatalogParams::*field) {
    return [field](RunConfig& c, const Value& v, const std::string& k) { c.problem.*field = as_number(v, k); };
}

Setter count(std::size_t RunConfig::*field) {
    return [field](RunConfig& c, const Value& v, const std::string& k) {
        c.*field = static_cast<std::size_t>(as_count(v, k));
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"problem.catalog", [](RunConfig& c, const Value& v, const std::string& k) { c.catalog = as_string(v, k); }},
        {"problem.beta0", param(&CatalogParams::beta0)},
        {"problem.beta1", param(&CatalogParams::beta1)},
        {"problem.beta2", param(&CatalogParams::beta2)},
        {"problem.sigma0", param(&CatalogParams::sigma0)},
        {"problem.sigma1", param(&CatalogParams::sigma1)},
        {"problem.a", param(&CatalogParams::a)},
        {"problem.c", param(&CatalogParams::c)},
        {"problem.rho", param(&CatalogParams::rho)},
        {"problem.x_star", param(&CatalogParams::x_star)},
        {"problem.u_max", param(&CatalogParams::u_max)},
        {"problem.epsilon", param(&CatalogParams::epsilon)},
        {"problem.n_controls",
         [](RunConfig& c, const Value& v, const std::string& k) {
             c.problem.n_controls = static_cast<std::size_t>(as_count(v, k));
         }},
        {"discount.kind",
         [](RunConfig& c, const Value& v, const std::string& k) { c.discount_kind = as_string(v, k); }},
        {"discount.delta", number(&RunConfig::delta)},
        {"discount.T0", number(&RunConfig::T0)},
        {"discount.k", number(&RunConfig::k)},
        {"grid.x_min", number(&RunConfig::x_min)},
        {"grid.x_max", number(&RunConfig::x_max)},
        {"grid.n_x", count(&RunConfig::n_x)},
        {"grid.n_t", count(&RunConfig::n_t)},
        {"grid.dt", number(&RunConfig::dt)},
        {"grid.window", number(&RunConfig::window)},
        {"grid.levels", count(&RunConfig::levels)},
        {"anchor.tau", number(&RunConfig::tau)},
        {"anchor.t0", number(&RunConfig::t0)},
        {"anchor.x0", number(&RunConfig::x0)},
        {"sim.step", number(&RunConfig::step)},
        {"sim.n_paths", count(&RunConfig::n_paths)},
        {"sim.seed", [](RunConfig& c, const Value& v, const std::string& k) { c.seed = as_count(v, k); }},
        {"sim.revision_interval", number(&RunConfig::revision_interval)},
        {"tol.tail", number(&RunConfig::tol_tail)},
        {"tol.mc_sigma", number(&RunConfig::mc_sigma)},
        {"tol.reduction", number(&RunConfig::tol_reduction)},
        {"recursive.head_rate", number(&RunConfig::head_rate)},
        {"output.dir", [](RunConfig& c, const Value& v, const std::string& k) { c.out_dir = as_string(v, k); }},
    };
    return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ValidationError("'" + key + "' " + what, key);
}

}  // namespace

std::map<std::string, Value> parse_toml(const std::string& text) {
    std::map<std::string, Value> out;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError("malformed section header on line " + std::to_string(line), {}, line);
            section = trim(s.substr(1, s.size() - 2));
            if (!valid_name(section)) {
                throw ParseError("bad section name '" + section + "' on line " + std::to_string(line), section, line);
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value on line " + std::to_string(line), {}, line);
        const std::string name = trim(s.substr(0, eq));
        if (!valid_name(name)) throw ParseError("bad key '" + name + "' on line " + std::to_string(line), name, line);
        const std::string key = section.empty() ? name : section + "." + name;
        if (out.count(key)) throw ParseError("duplicate key '" + key + "'", key, line);
        out.emplace(key, parse_value(trim(s.substr(eq + 1)), key, line));
    }
    return out;
}

RunConfig load_config(const std::string& text) {
    const auto keys = parse_toml(text);
    RunConfig c;
    // The catalog preset goes first so that explicit problem.* keys override it.
    if (const auto it = keys.find("problem.catalog"); it != keys.end()) {
        c.catalog = as_string(it->second, it->first);
        if (c.catalog == "confined") {
            c.problem.beta0 = 0.2;
            c.problem.beta1 = -1.0;
            c.problem.x_star = 0.3;
        } else if (c.catalog == "zero") {
            c.problem.a = 0.0;
            c.problem.c = 0.0;
        }
    }
    for (const auto& [key, value] : keys) {
        const auto it = setters().find(key);
        if (it == setters().end()) throw ParseError("unknown config key '" + key + "'", key);
        it->second(c, value, key);
    }
    validate(c);
    return c;
}

void validate(const RunConfig& c) {
    require(c.catalog == "default" || c.catalog == "confined" || c.catalog == "zero", "problem.catalog",
            "must be one of default, confined, zero");
    require(c.discount_kind == "exponential" || c.discount_kind == "hyperbolic", "discount.kind",
            "must be exponential or hyperbolic");
    const auto& q = c.problem;
    require(q.sigma0 > std::abs(q.sigma1) + std::sqrt(std::max(q.epsilon, 0.0)), "problem.sigma0",
            "must exceed |sigma1| + sqrt(epsilon)");
    require(q.epsilon > 0.0, "problem.epsilon", "must be positive");
    require(q.a >= 0.0, "problem.a", "must be nonnegative");
    require(q.c >= 0.0, "problem.c", "must be nonnegative");
    require(q.rho >= 0.0, "problem.rho", "must be nonnegative");
    require(q.u_max > 0.0, "problem.u_max", "must be positive");
    require(q.n_controls >= 2 && q.n_controls <= 101, "problem.n_controls", "must lie in [2, 101]");
    require(c.delta > 0.0, "discount.delta", "must be positive");
    require(c.T0 > 0.0, "discount.T0", "must be positive");
    require(c.k >= 0.0, "discount.k", "must be nonnegative");
    require(c.x_min < c.x_max, "grid.x_max", "must exceed grid.x_min");
    require(c.n_x >= 5 && c.n_x <= 4001, "grid.n_x", "must lie in [5, 4001]");
    require(c.n_t >= 1, "grid.n_t", "must be at least 1");
    require(c.dt > 0.0, "grid.dt", "must be positive");
    require(c.window > 0.0, "grid.window", "must be positive");
    require(c.levels >= 3 && c.levels <= 6, "grid.levels", "must lie in [3, 6]");
    require(c.tau >= 0.0, "anchor.tau", "must be nonnegative");
    require(c.t0 >= 0.0, "anchor.t0", "must be nonnegative");
    require(c.x0 >= c.x_min && c.x0 <= c.x_max, "anchor.x0", "must lie inside the grid");
    require(c.step > 0.0, "sim.step", "must be positive");
    require(c.n_paths >= 2, "sim.n_paths", "must be at least 2");
    require(c.revision_interval > 0.0, "sim.revision_interval", "must be positive");
    require(c.tol_tail > 0.0, "tol.tail", "must be positive");
    require(c.mc_sigma > 0.0, "tol.mc_sigma", "must be positive");
    require(c.tol_reduction > 0.0, "tol.reduction", "must be positive");
    require(!c.out_dir.empty(), "output.dir", "must not be empty");
}

ProblemSpec make_problem(const RunConfig& c) {
    auto p = catalog_problem(c.problem);
    p.name = c.catalog;
    return p;
}

DiscountSpec make_discount(const RunConfig& c) {
    if (c.discount_kind == "exponential") return DiscountSpec::exponential(c.delta, c.T0);
    if (c.k == 0.0) return DiscountSpec::matched_hyperbolic(c.delta, c.T0);
    return DiscountSpec::custom(c.delta, c.T0, [k = c.k](double tau) { return 1.0 / (1.0 + k * tau); });
}

SpaceGrid make_space(const RunConfig& c) { return {c.x_min, c.x_max, c.n_x}; }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace equihor::cli

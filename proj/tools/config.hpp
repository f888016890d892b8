#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>

#include "equihor/model.hpp"
#include "equihor/pde.hpp"

namespace equihor::cli {

// Malformed input: bad syntax, unknown key, wrong value type.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::string key = {}, int line = 0)
        : std::runtime_error(what), key_(std::move(key)), line_(line) {}
    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    std::string key_;
    int line_;
};

// Well-formed input outside the documented ranges.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& what, std::string key = {})
        : std::runtime_error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

using Value = std::variant<double, std::string, bool>;

// Flat "section.key" -> value map from the TOML subset we accept: [section] headers, dotted keys,
// numbers, quoted strings, true/false, and # comments.
std::map<std::string, Value> parse_toml(const std::string& text);

struct RunConfig {
    std::string catalog = "default";  // default | confined | zero
    CatalogParams problem;

    std::string discount_kind = "hyperbolic";  // exponential | hyperbolic
    double delta = 0.5;
    double T0 = 1.0;
    double k = 0.0;  // 0 selects the matched rate

    double x_min = -4.0;
    double x_max = 4.0;
    std::size_t n_x = 101;
    std::size_t n_t = 40;
    double dt = 0.005;
    double window = 2.0;
    std::size_t levels = 3;

    double tau = 0.5;
    double t0 = 0.0;
    double x0 = 0.1;

    double step = 0.025;
    std::size_t n_paths = 20000;
    std::uint64_t seed = 1;
    double revision_interval = 0.25;

    double tol_tail = 1e-4;
    double mc_sigma = 3.0;
    double tol_reduction = 1e-8;

    double head_rate = -1.0;  // negative selects delta / 2

    std::string out_dir = "out";
};

/// Parses and range-checks a config. Unknown keys raise ParseError naming the key.
RunConfig load_config(const std::string& text);

void validate(const RunConfig& c);

ProblemSpec make_problem(const RunConfig& c);
DiscountSpec make_discount(const RunConfig& c);
SpaceGrid make_space(const RunConfig& c);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace equihor::cli

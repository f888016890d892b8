#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace equihor::cli {

namespace exit_code {
constexpr int ok = 0;
constexpr int assertion = 1;
constexpr int parse = 2;
constexpr int validation = 3;
constexpr int stability = 4;
}  // namespace exit_code

struct Options {
    std::string out_dir;
    bool check = true;
    bool quiet = false;
    // Raw config bytes, hashed into the summary.
    std::string config_text;
};

const std::vector<std::string>& command_names();

/// Runs one pipeline, writes its artifacts and summary.json into opt.out_dir, and returns the exit
/// code. Library errors are mapped to exit codes here and recorded in the summary.
int run_command(const std::string& name, const RunConfig& cfg, const Options& opt, std::ostream& log);

}  // namespace equihor::cli

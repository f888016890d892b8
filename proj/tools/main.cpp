#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "json.hpp"

using namespace equihor::cli;

namespace {

int parse_failure(const std::string& what, const std::string& key) {
    nlohmann::ordered_json rec{{"error", "parse"}, {"message", what}, {"exit_code", exit_code::parse}};
    if (!key.empty()) rec["key"] = key;
    std::cerr << rec.dump() << '\n';
    return exit_code::parse;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibrium and classical solvers for problems with a finite-horizon discount head"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool check = true;
    bool quiet = false;
    app.add_option("--config", config_path, "TOML config file")->required();
    app.add_option("--out", out_dir, "output directory (overrides EQUIHOR_OUT and output.dir)");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides sim.seed)");
    app.add_flag("--check,!--no-check", check, "evaluate assertions and fail on violations");
    app.add_flag("--quiet", quiet, "print nothing but diagnostics");
    app.fallthrough();

    for (const auto& name : command_names()) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code::parse;
    }

    std::ifstream in(config_path, std::ios::binary);
    if (!in) return parse_failure("cannot read config '" + config_path + "'", {});
    std::ostringstream text;
    text << in.rdbuf();

    RunConfig cfg;
    try {
        cfg = load_config(text.str());
    } catch (const ParseError& e) {
        return parse_failure(e.what(), e.key());
    } catch (const ValidationError& e) {
        nlohmann::ordered_json rec{
            {"error", "validation"}, {"message", e.what()}, {"key", e.key()}, {"exit_code", exit_code::validation}};
        std::cerr << rec.dump() << '\n';
        return exit_code::validation;
    }
    if (*seed_opt) cfg.seed = seed;

    Options opt;
    opt.check = check;
    opt.quiet = quiet;
    opt.config_text = text.str();
    if (!out_dir.empty()) {
        opt.out_dir = out_dir;
    } else if (const char* env = std::getenv("EQUIHOR_OUT"); env && *env) {
        opt.out_dir = env;
    } else {
        opt.out_dir = cfg.out_dir;
    }
    return run_command(app.get_subcommands().front()->get_name(), cfg, opt, quiet ? std::cerr : std::cout);
}

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sfpe/commands.hpp"
#include "sfpe/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fixed points of smoothing transforms: analysis, simulation and verification"};
    std::string config_path;
    std::string command;
    std::string out;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    app.add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    app.add_option("--command", command, "Command to run")->required()->check(CLI::IsMember(sfpe::command_names()));
    auto* out_opt = app.add_option("--out", out, "Output path prefix (overrides config)");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides config)");
    app.add_option("--threads", threads, "Worker threads; results do not depend on it")->check(CLI::Range(1u, 1024u));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sfpe::kExitUsage;
    }

    std::ifstream in(config_path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string document = buf.str();

    sfpe::RunConfig cfg;
    try {
        cfg = sfpe::parse_config(document);
    } catch (const sfpe::ConfigError& e) {
        for (const auto& msg : e.errors()) std::cerr << "config error: " << msg << '\n';
        return sfpe::kExitUsage;
    }
    if (*out_opt) cfg.output = out;
    if (*seed_opt) cfg.mc.seed = seed;

    try {
        return sfpe::run_command(cfg, command, std::cout, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return sfpe::kExitUsage;
    }
}

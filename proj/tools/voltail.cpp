// SPDX-License-Identifier: Apache-2.0
// voltail <validate|simulate|density|tails|scaling|ingest> --config FILE [--seed N] [--out DIR]
#include <iostream>

#include <CLI11.hpp>

#include "voltail/error.hpp"
#include "voltail/io/commands.hpp"
#include "voltail/io/config.hpp"
#include "voltail/io/schema.hpp"

using namespace voltail;

int main(int argc, char** argv) {
    CLI::App app{"Stochastic-volatility tail experiments"};
    app.set_version_flag("--version", VOLTAIL_VERSION);
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    unsigned workers = 1;
    bool check = false;
    bool print_config = false;

    for (const auto& name : io::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config, or a manifest to rerun")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_dir, "override the output directory");
        sub->add_option("--workers", workers, "worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
        sub->add_flag("--check", check, "exit 4 when an acceptance tolerance is missed");
        sub->add_flag("--print-config", print_config, "print the resolved config and exit");
    }
    app.add_subcommand("schema", "print the config JSON schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : io::exit_config;
    }
    if (app.got_subcommand("schema")) {
        std::cout << io::config_schema().dump(2) << "\n";
        return io::exit_ok;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    auto* sub = app.get_subcommands().front();

    try {
        nlohmann::json j = config_path.empty() ? nlohmann::json::object() : io::load_config_json(config_path);
        require(j.is_object(), ErrorKind::config, "config must be a JSON object");
        if (sub->count("--seed")) j["seed"] = seed;
        if (sub->count("--out")) j["output_dir"] = out_dir;
        const auto cfg = io::parse_config(j);
        if (print_config) {
            std::cout << io::to_json(cfg).dump(2) << "\n";
            return io::exit_ok;
        }
        io::CommandOptions opt;
        opt.workers = workers;
        opt.check = check;
        const auto r = io::run_command(command, cfg, opt);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << r.summary.dump(2) << "\n";
        return r.exit_code;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return io::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io::exit_numerical;
    }
}

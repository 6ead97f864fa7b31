#include <CLI11.hpp>
#include <iostream>

#include "uprop/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"uprop: nonlinear uncertainty propagation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    uprop::RunOptions opts;

    auto* run = app.add_subcommand("run", "Execute a scenario config (file path or bundled name)");
    run->add_option("config", config_path, "Config file or bundled scenario name")->required();
    run->add_option("--seed", opts.seed, "Override the Monte Carlo base seed");
    run->add_option("--threads", opts.threads, "Worker threads for path/kernel fan-out");
    run->add_option("--out-dir", opts.out_dir, "Output directory (overrides config and env)");

    auto* validate = app.add_subcommand("validate", "Parse and validate a config, then exit");
    validate->add_option("config", config_path, "Config file or bundled scenario name")->required();

    auto* list = app.add_subcommand("list-scenarios", "List bundled scenario presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& [name, text] : uprop::bundled_scenarios()) {
                // First comment line doubles as the description.
                std::string desc;
                auto pos = text.find("//");
                if (pos != std::string::npos) {
                    auto end = text.find('\n', pos);
                    desc = text.substr(pos + 2, end - pos - 2);
                }
                std::cout << name << " --" << desc << '\n';
            }
            return 0;
        }
        if (validate->parsed()) {
            uprop::load_config(config_path);
            std::cout << "OK: " << config_path << '\n';
            return 0;
        }
        const auto config = uprop::load_config(config_path);
        const auto summary = uprop::run_scenario(config, opts);
        std::cout << "scenario: " << summary.name << '\n';
        for (const auto& line : summary.lines) std::cout << line << '\n';
        std::cout << "artifacts in " << summary.out_dir << ":";
        for (const auto& a : summary.artifacts) std::cout << ' ' << a;
        std::cout << '\n';
        return 0;
    } catch (const uprop::ConfigError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

// rfmap command-line tool.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rfmap/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"rfmap: indoor RF ray tracing and radio-map generation"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = "out";
    bool no_utd = false;
    std::optional<std::uint64_t> seed;

    const char* help[] = {
        "Trace every AP to the MPs (or to the radio-map cells) and list the received paths",
        "Generate the device-based radio map over the configured cells",
        "Generate the device-free radio map over the human placements",
        "Sample one AP over the floor and write a heatmap PNG",
        "Evaluate nearest-neighbour localization on the active radio map",
        "Generate the passive map with and without UTD and report the per-stream degradation",
    };
    const auto& names = rfmap::command_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        CLI::App* sub = app.add_subcommand(names[i], help[i]);
        sub->add_option("--config", config_path, "Site configuration JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
        sub->add_flag("--no-utd", no_utd, "Disable UTD (humans only attenuate)");
        sub->add_option("--seed", seed, "Override the configured seed");
    }
    CLI11_PARSE(app, argc, argv);

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        rfmap::SiteConfig cfg = rfmap::load_config(config_path);
        if (no_utd) cfg.utd_enabled = false;
        if (seed) cfg.seed = *seed;
        const rfmap::RunResult r = rfmap::run_command(cmd, cfg, out_dir);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
        for (const auto& a : r.artifacts) std::cout << a << '\n';
    } catch (const std::exception& e) {
        std::cerr << "rfmap " << cmd << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}

// fsolink: SER sweeps, plots and detector training from the command line.

#include <iostream>

#include <CLI11.hpp>

#include "fsolink/commands.hpp"
#include "fsolink/common.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo SER simulator for M-QAM over log-normal fading with ML and neural detectors"};
    app.set_version_flag("--version", std::string(fsolink::kVersion));
    app.require_subcommand(1);

    fsolink::CommandContext ctx;
    ctx.log = &std::cerr;
    ctx.level = fsolink::log_level_from_env();

    std::uint64_t seed = 0;
    int jobs = 1;
    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Override the config seed");
        cmd->add_option("-j,--jobs", jobs, "Grid points evaluated concurrently (results do not depend on it)")
            ->check(CLI::Range(1, 1024));
    };

    std::string config_path;
    auto* sweep = app.add_subcommand("sweep", "Run every requested detector x CSI curve");
    sweep->add_option("config", config_path, "Config file or a manifest.json from an earlier run")->required();
    add_run_options(sweep);

    std::vector<std::string> csvs;
    std::string svg_path;
    auto* plot = app.add_subcommand("plot", "Draw CSV curves into one SVG");
    plot->add_option("csv", csvs, "Curve files")->required();
    plot->add_option("-o,--output", svg_path, "SVG path")->required();

    std::string model_path;
    auto* train = app.add_subcommand("train", "Train one network detector and save it");
    train->add_option("config", config_path, "Config file")->required();
    train->add_option("-o,--output", model_path, "Model file or directory (default: output.dir)");
    add_run_options(train);

    auto* detect = app.add_subcommand("detect", "Evaluate a saved detector over the configured channel");
    detect->add_option("model", model_path, "Model file")->required();
    detect->add_option("config", config_path, "Config file")->required();
    add_run_options(detect);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : fsolink::kExitBadInput;
    }

    ctx.jobs = jobs;
    for (auto* cmd : {sweep, train, detect}) {
        if (cmd->parsed() && cmd->count("--seed") > 0) ctx.seed_override = seed;
    }

    if (*sweep) return fsolink::cmd_sweep(config_path, ctx);
    if (*plot) return fsolink::cmd_plot(csvs, svg_path, ctx);
    if (*train) return fsolink::cmd_train(config_path, model_path, ctx);
    return fsolink::cmd_detect(model_path, config_path, ctx);
}

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rba/audit.hpp"
#include "rba/config.hpp"
#include "rba/errors.hpp"

namespace {

rba::Config load(const std::string& config_path, const std::string& out_dir) {
    rba::Config cfg = rba::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    return cfg;
}

int finish(const rba::RunOutcome& outcome, const std::string& out_dir) {
    std::cout << "run " << outcome.report.run_id << ": report written to "
              << out_dir << "\n";
    if (!outcome.report.errors.empty()) {
        std::cerr << outcome.report.errors.size()
                  << " cell error(s) recorded in the report\n";
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audit how query-enhancement strategies shift dense-retrieval "
                 "biases"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_path, out_file, strategy;
    bool offline = false;
    uint64_t seed = 0;

    auto* audit = app.add_subcommand(
        "audit", "Full grid: t-tests, decorrelation, diagnostics, FOIL");
    auto* decorrelate = app.add_subcommand(
        "decorrelate", "Feature-score correlations and reductions only");
    auto* foil = app.add_subcommand("foil", "FOIL adversarial accuracy only");
    for (CLI::App* cmd : {audit, decorrelate, foil}) {
        cmd->add_option("--config", config_path, "Config file (JSON)")
            ->required();
        cmd->add_option("--out", out_dir, "Output directory override");
        cmd->add_flag("--offline", offline,
                      "Serve generations from cache only; any miss is an error");
    }

    auto* generate = app.add_subcommand(
        "generate", "Build the synthetic dataset from seed documents");
    generate->add_option("--seeds", seeds_path, "Seed documents (JSONL)")
        ->required();
    generate->add_option("--out", out_file, "Dataset file to write")->required();
    generate->add_option("--seed", seed, "RNG seed for pair construction");

    auto* enhance = app.add_subcommand(
        "enhance", "Pre-warm the generation cache and dump enhanced queries");
    enhance->add_option("--config", config_path, "Config file (JSON)")
        ->required();
    enhance->add_option("--out", out_dir, "Output directory override");
    enhance->add_flag("--offline", offline, "Cache only; any miss is an error");
    enhance->add_option("--strategy", strategy,
                        "Only this strategy (default: all non-baseline)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (audit->parsed()) {
            const rba::Config cfg = load(config_path, out_dir);
            return finish(rba::run_and_write(cfg, rba::RunStage::audit, offline),
                          cfg.output_dir);
        }
        if (decorrelate->parsed()) {
            const rba::Config cfg = load(config_path, out_dir);
            return finish(
                rba::run_and_write(cfg, rba::RunStage::decorrelate, offline),
                cfg.output_dir);
        }
        if (foil->parsed()) {
            const rba::Config cfg = load(config_path, out_dir);
            return finish(rba::run_and_write(cfg, rba::RunStage::foil, offline),
                          cfg.output_dir);
        }
        if (generate->parsed()) {
            rba::run_generate(seeds_path, out_file, seed);
            std::cout << "dataset written to " << out_file << "\n";
            return 0;
        }
        if (enhance->parsed()) {
            const rba::Config cfg = load(config_path, out_dir);
            const int code = rba::run_enhance(cfg, strategy, offline);
            std::cout << "enhanced queries written to " << cfg.output_dir
                      << "\n";
            return code;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

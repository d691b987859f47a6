#include "pmcal/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"pmcal - calibrate and evaluate low-cost PM sensors"};
    app.require_subcommand(1);

    std::vector<std::string> ingest_files;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "validate sensor CSV files");
    ingest->add_option("files", ingest_files, "CSV files to validate")->required();
    ingest->add_option("--out", ingest_out, "directory for validated copies and ingest_report.csv");

    std::string synth_config;
    std::uint64_t seed = 0;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic collocation dataset");
    synth->add_option("--config", synth_config, "scenario file (defaults apply when omitted)");
    synth->add_option("--seed", seed, "random seed")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    std::string run_config;
    std::string run_out;
    auto* run = app.add_subcommand("run", "preprocess, cleanse, calibrate and evaluate");
    run->add_option("--config", run_config, "pipeline config file")->required();
    run->add_option("--out", run_out, "output directory (overrides output.dir)");

    CLI11_PARSE(app, argc, argv);

    pmcal::cli::CommandResult result;
    if (*ingest) {
        std::vector<std::filesystem::path> paths(ingest_files.begin(), ingest_files.end());
        result = pmcal::cli::cmd_ingest(paths, ingest_out, std::cerr);
    } else if (*synth) {
        result = pmcal::cli::cmd_synth(synth_config, seed, synth_out, std::cerr);
    } else if (*run) {
        result = pmcal::cli::cmd_run(run_config, run_out, std::cerr);
    }
    return result.exit_code();
}

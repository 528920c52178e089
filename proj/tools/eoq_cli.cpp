// eoq: command line front end for the experiment runner.
#include <iostream>

#include "CLI11.hpp"
#include "eoq/experiment.hpp"

int main(int argc, char** argv) {
    namespace ex = eoq::experiment;
    CLI::App app{"Exchange-only qubit simulation experiments"};
    app.set_version_flag("--version", std::string(ex::kVersion));
    app.require_subcommand(1, 1);

    std::string config;
    ex::Overrides ov;
    std::string out;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    const std::map<std::string, std::string> blurbs = {
        {"enumerate", "list TQDs and qubit assignments"},
        {"place", "pack qubits onto the live grid"},
        {"fingerprint", "exchange fingerprint maps per axis"},
        {"nosc", "oscillations to 1/e decay per axis"},
        {"rb", "blind randomized benchmarking with leakage"},
        {"route", "singlet routing pulses from the SPAM pair"},
        {"validate", "run the oracle suites"},
    };
    for (const auto& name : ex::experiment_names()) {
        auto* sub = app.add_subcommand(name, blurbs.at(name));
        sub->add_option("--config", config, "JSON config file")->required();
        sub->add_option("--out", out, "output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "master seed (overrides seed)");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : ex::kConfigError;
    }

    auto* sub = app.get_subcommands().front();
    if (sub->count("--out")) ov.out = out;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--threads")) ov.threads = threads;
    return ex::run_experiment(sub->get_name(), config, ov);
}

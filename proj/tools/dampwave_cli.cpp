// dampwave: command-line front end for scenario files.
//
// Exit codes: 0 success, 2 validation mismatch, 3 solver failure, 4 config error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dampwave/dampwave.hpp"

namespace {

struct Args {
    std::string config;
    std::string output;
    std::optional<double> alpha, alpha_min, alpha_max, T, dt;
    bool quiet = false;
};

int execute(const Args& args, dampwave::PipelineCommand cmd) {
    using namespace dampwave;
    ScenarioConfig cfg;
    try {
        cfg = load_config(args.config);
    } catch (const std::exception& e) {
        std::cerr << "dampwave: " << e.what() << '\n';
        return 4;
    }
    PipelineOptions o;
    o.command = cmd;
    o.alpha = args.alpha;
    o.alpha_min = args.alpha_min;
    o.alpha_max = args.alpha_max;
    o.T = args.T;
    o.dt = args.dt;
    o.output_directory = args.output;
    try {
        const auto m = run_pipeline(cfg, o);
        if (!args.quiet) {
            for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << m.status << ": " << m.artifacts.size() << " files in " << m.output_directory << '\n';
            if (m.summary.contains("sweep")) std::cout << "sweep: " << m.summary["sweep"].dump() << '\n';
        }
        if (m.exit_code == 2) std::cerr << "dampwave: cross-validation mismatch; see validation.json under " << m.output_directory << '\n';
        return m.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "dampwave: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    using dampwave::PipelineCommand;
    CLI::App app{"Eigencurve and block-operator analysis of damped wave equations"};
    app.set_version_flag("--version", dampwave::kToolVersion);
    app.require_subcommand(1);
    Args args;
    app.add_option("-o,--output", args.output, "Output directory (overrides config and DAMPWAVE_OUTPUT_DIR)");
    app.add_flag("-q,--quiet", args.quiet, "Print errors only");

    const auto add = [&](const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", args.config, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
        return sub;
    };
    auto* run = add("run", "Run every stage");
    auto* sweep = add("sweep", "Bisect for the smallest alpha with a positive real eigenvalue");
    sweep->add_option("--alpha-min", args.alpha_min, "Lower end of the alpha range")->check(CLI::PositiveNumber);
    sweep->add_option("--alpha-max", args.alpha_max, "Upper end of the alpha range")->check(CLI::PositiveNumber);
    auto* curves = add("curves", "Eigencurve table only");
    auto* spectrum = add("spectrum", "Block-operator spectrum at one alpha");
    spectrum->add_option("--alpha", args.alpha, "Damping strength")->required()->check(CLI::PositiveNumber);
    auto* evolve = add("evolve", "Time evolution at one alpha");
    evolve->add_option("--alpha", args.alpha, "Damping strength")->required()->check(CLI::PositiveNumber);
    evolve->add_option("--T", args.T, "Final time")->check(CLI::PositiveNumber);
    evolve->add_option("--dt", args.dt, "Time step")->check(CLI::PositiveNumber);
    auto* validate = add("validate", "Cross-check eigencurves against the block spectrum");
    validate->add_option("--alpha", args.alpha, "Damping strength (default: alpha.values)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }
    if (*run) return execute(args, PipelineCommand::Run);
    if (*sweep) return execute(args, PipelineCommand::Sweep);
    if (*curves) return execute(args, PipelineCommand::Curves);
    if (*spectrum) return execute(args, PipelineCommand::Spectrum);
    if (*evolve) return execute(args, PipelineCommand::Evolve);
    return execute(args, PipelineCommand::Validate);
}

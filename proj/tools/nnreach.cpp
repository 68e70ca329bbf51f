// nnreach: exact cell enumeration and reachability for ReLU networks.

#include <CLI11.hpp>

#include <iostream>

#include "nnreach/cli.hpp"

namespace {

void add_common(CLI::App* sub, nnreach::cli::RunConfig& cfg, std::string& format) {
    sub->add_option("--network,-n", cfg.network_path, "Network file (.nnet or JSON weights)")->required();
    sub->add_option("--format", format, "Force the network format")->check(CLI::IsMember({"nnet", "json"}));
    sub->add_flag("--nnet-normalize", cfg.nnet_normalize,
                  "Fold the NNet header's input/output normalization into the network");
    sub->add_option("--steps,-T", cfg.steps, "Compose the network with itself this many times")->check(CLI::PositiveNumber);
    sub->add_option("--rng-seed", cfg.rng_seed, "Seed for seed-point perturbation and sampling");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace nnreach::cli;
    CLI::App app{"Exact piecewise-affine cell enumeration and reachability for ReLU networks"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string format;
    std::vector<double> seed_point;
    std::string stream_path;

    auto add_run = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, cfg, format);
        sub->add_option("--domain,-d", cfg.domain, "Input set: box:lo,hi x lo,hi ... or an H-rep JSON file")->required();
        sub->add_option("--out,-o", cfg.out_path, "Cell stream (JSONL); '-' for stdout");
        sub->add_option("--summary", cfg.summary_path, "Summary JSON (default: <out>.summary.json)");
        sub->add_option("--seed-point", seed_point, "Starting point for the march (default: domain Chebyshev center)")
            ->delimiter(',');
        sub->add_option("--max-cells", cfg.max_cells, "Cell budget");
        sub->add_option("--max-lps", cfg.max_lps, "LP budget");
        sub->add_option("--max-seconds", cfg.max_seconds, "Wall-clock budget (0 = none)");
        sub->add_flag("--literal-flip", cfg.literal_flip, "Plain bit-flip rule when crossing facets");
        return sub;
    };

    add_run("enumerate", "Enumerate the linear regions over the domain");
    add_run("forward", "Cells with their forward images")
        ->add_flag("--minimize", cfg.minimize, "LP-minimize each image");
    for (const char* name : {"backward", "verify"}) {
        const bool is_verify = std::string(name) == "verify";
        CLI::App* sub = add_run(name, is_verify ? "Anytime safety check against unsafe output sets (ties count as unsafe)"
                                                : "Cells with preimages of the output sets");
        sub->add_option("--output-set,-y", cfg.output_sets,
                        "Output set: H-rep JSON, box:..., argmax:i/n or argmin:i/n (repeatable)")
            ->required();
        sub->add_flag("--minimize", cfg.minimize, "LP-minimize each nonempty preimage");
        sub->add_flag("--nonempty-only", cfg.nonempty_only, "Only write cells with a nonempty preimage");
        if (is_verify) sub->add_flag("--anytime", cfg.anytime, "Stop at the first unsafe cell");
    }

    CLI::App* check = app.add_subcommand("check", "Re-validate a cell stream against the network");
    check->group("");
    add_common(check, cfg, format);
    check->add_option("stream", stream_path, "Cell stream to check")->required();
    check->add_option("--samples", cfg.check_samples, "Samples per cell");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ExitCode::ok : ExitCode::error;
    }

    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (format == "nnet") cfg.format = nnreach::NetworkFormat::nnet;
    if (format == "json") cfg.format = nnreach::NetworkFormat::json;
    if (!seed_point.empty()) cfg.seed_point = seed_point;

    try {
        if (cfg.subcommand == "check") return run_check(cfg, stream_path);
        return run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitCode::error;
    }
}

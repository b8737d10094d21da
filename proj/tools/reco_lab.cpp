#include <iostream>

#include <CLI11.hpp>

#include "reco/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"reco_lab: regional contrast on synthetic segmentation data"};
    app.require_subcommand(1);

    reco::cli::Options opts;
    std::uint64_t seed = 0;
    std::string out, checkpoint, split;
    bool no_timestamp = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "run configuration (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the global seed");
        sub->add_option("--out", out, "override out_dir");
    };
    auto* gen = app.add_subcommand("generate", "write the synthetic dataset");
    auto* part = app.add_subcommand("partition", "build the labelled/unlabelled partition");
    auto* train = app.add_subcommand("train", "train and write metrics and checkpoints");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    for (auto* s : {gen, part, train, eval}) common(s);
    train->add_flag("--resume", opts.resume, "continue from the latest checkpoint");
    train->add_option("--checkpoint", checkpoint, "checkpoint to resume from");
    train->add_flag("--no-timestamp", no_timestamp, "omit the timestamp line from metrics.csv");
    eval->add_option("--checkpoint", checkpoint, "checkpoint to evaluate");
    eval->add_option("--split", split, "train or val");
    eval->add_flag("--relate", opts.relate, "export relation graph and dendrogram");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : reco::cli::kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) opts.seed = seed;
    if (sub->count("--out") > 0) opts.out = out;
    if (!checkpoint.empty()) opts.checkpoint = checkpoint;
    if (!split.empty()) opts.split = split;
    opts.timestamp = !no_timestamp;
    return reco::cli::run(sub->get_name(), opts, std::cout, std::cerr);
}

#pragma once

#include <cstdint>
#include <string>

#include "reco/eval.hpp"
#include "reco/io.hpp"
#include "reco/trainer.hpp"

namespace reco {

struct EvalOptions {
    std::string split = "val";
    EmbeddingKind embedding = EmbeddingKind::Representation;
};

/// One JSON file drives every subcommand. Sections: seed, out_dir, data,
/// partition, model, loss, sampler, optim, train, eval. Every section and key
/// is optional; unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "run";
    SynthSpec data;
    PartitionSpec partition;
    ModelConfig model;
    TrainConfig train;
    /// Save a checkpoint every K iterations (0: final only).
    int checkpoint_every = 0;
    EvalOptions eval;

    /// Pushes `seed` into the data and train sections and checks everything.
    void finalize();
    Json to_json() const;

    fs::path dataset_dir() const { return fs::path(out_dir) / "dataset"; }
    fs::path train_dir() const { return fs::path(out_dir) / "train"; }
    fs::path eval_dir() const { return fs::path(out_dir) / "eval"; }
    Rng partition_rng() const;
};

/// Throws Error(Config) naming the offending key, e.g. "train.augmentation".
RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const fs::path& path);

}  // namespace reco

#pragma once

#include "reco/io.hpp"
#include "reco/trainer.hpp"

namespace reco {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to continue a run bit-identically. The field list and
/// JSON layout are described in docs/checkpoint.md.
struct Checkpoint {
    int iteration = 0;
    ModelConfig model;
    double ema_decay = 0.99;
    /// Root generator; per-iteration streams are forked from it by
    /// (purpose, iteration), so no further counters need saving.
    Rng::State rng;
    ToyModelParams student;
    ToyModelParams teacher;
    ToyModelParams velocity;
    /// The run configuration that produced the checkpoint, verbatim.
    Json config;
};

Checkpoint capture(const Trainer& trainer, const Json& config);
void restore(Trainer& trainer, const Checkpoint& ckpt);

Json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& path);

Json params_to_json(const ToyModelParams& p);
/// Throws ShapeMismatch if the tensors do not match `cfg`.
ToyModelParams params_from_json(const Json& j, const ModelConfig& cfg);

}  // namespace reco

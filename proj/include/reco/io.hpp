#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "reco/data.hpp"

namespace reco {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Binary PPM (P6) for images and PGM (P5) for label maps, 8 bits per sample.
// Image values are written as round(255·v); generated images are already
// multiples of 1/255 and survive the round trip exactly.
void write_ppm(const fs::path& path, const Image& image);
Image read_ppm(const fs::path& path);
void write_pgm(const fs::path& path, const LabelMap& label);
LabelMap read_pgm(const fs::path& path);

/// Writes text atomically enough for our purposes (temp file + rename).
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
Json read_json(const fs::path& path);

Json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const Json& j);

// Dataset layout:
//   manifest.json
//   train/000000.ppm, train/000000.pgm, ...
//   val/...
// The manifest lists every id with its split, file names and drawn classes,
// plus the spec it was generated from.
void save_dataset(const fs::path& dir, const SynthSpec& spec, const SyntheticData& data);

struct LoadedDataset {
    SynthSpec spec;
    SyntheticData data;
};
LoadedDataset load_dataset(const fs::path& dir);

enum class PartitionMode { PartialDatasetFullLabels, PartialLabelsFullDataset };
std::string_view to_string(PartitionMode m);
PartitionMode parse_partition_mode(std::string_view s);

struct PartitionSpec {
    PartitionMode mode = PartitionMode::PartialDatasetFullLabels;
    PdflSpec pdfl;
    LabelBudget budget;

    void validate() const;
};

/// What the trainer needs from a partition: which train images are
/// labelled, and the label maps to use for them (full or partial).
struct Partition {
    PartitionSpec spec;
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> unlabelled;
    /// Full labels for mode 1; partial maps for mode 2.
    std::vector<LabelMap> labels;
};

/// Builds a partition of `train` and its audit record.
struct PartitionOutcome {
    Partition partition;
    Json audit;
};
PartitionOutcome make_partition(const Dataset& train, const PartitionSpec& spec, Rng rng);

// partition.json next to the dataset manifest; partial maps in train_partial/.
void save_partition(const fs::path& dataset_dir, const PartitionOutcome& outcome);
Partition load_partition(const fs::path& dataset_dir, const Dataset& train);

}  // namespace reco

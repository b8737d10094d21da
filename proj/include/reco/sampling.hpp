#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reco/core.hpp"
#include "reco/rng.hpp"

namespace reco {

enum class SamplingStrategy {
    Active,
    RandomQueryRandomKey,
    ActiveQueryRandomKey,
    EasyQueryActiveKey,
};

std::string_view to_string(SamplingStrategy s);
SamplingStrategy parse_sampling_strategy(std::string_view name);

struct SamplerConfig {
    int num_queries = 256;
    int num_keys = 512;
    double strong_threshold = 0.97;
    double weak_threshold = 0.7;
    std::uint64_t rng_seed = 0;
    SamplingStrategy strategy = SamplingStrategy::Active;

    static SamplerConfig from_loss(const LossConfig& loss, std::uint64_t seed, SamplingStrategy strategy);
};

enum class PixelSource : std::uint8_t { Labelled, Pseudo };

/// A pixel eligible for ReCo. `confidence` is the predicted probability of
/// the candidate's class at that pixel and drives the easy/hard split.
struct PixelCandidate {
    std::size_t pixel = 0;
    double confidence = 0.0;
    PixelSource source = PixelSource::Labelled;
};

struct PixelCandidateSet {
    std::map<int, std::vector<PixelCandidate>> by_class;

    void add(int class_id, PixelCandidate c) { by_class[class_id].push_back(c); }
    std::size_t total() const;
    /// Classes holding at least one candidate, ascending.
    std::vector<int> active_classes() const;
};

/// A pseudo-labelled pixel that passed the confidence gate.
struct GatedPixel {
    std::size_t pixel = 0;
    Label label = 0;
    double confidence = 0.0;
};

/// Pixels of each class available as negative keys for the other classes.
struct KeyPool {
    std::map<int, std::vector<std::size_t>> pixels_by_class;

    static KeyPool from_candidates(const PixelCandidateSet& candidates);
};

struct KeySample {
    Matrix keys;
    std::vector<std::size_t> pixel_ids;
    std::vector<int> source_classes;
};

struct EasyHardSplit {
    std::vector<std::size_t> easy;
    std::vector<std::size_t> hard;
};

/// Easy: confidence > δ_s. Hard: confidence ≤ δ_s.
EasyHardSplit split_easy_hard(std::span<const double> confidences, double strong_threshold);

/// Draws min(num_queries, available) queries of class `c` without replacement.
/// Throws EmptyClass if the class has no candidates.
QueryBundle sample_queries(const PixelCandidateSet& candidates, const DenseRepresentation& rep, int c,
                           const SamplerConfig& cfg, Rng& rng);

/// num_keys negative keys for query class `c`: a multinomial allocation over
/// the negative classes, then uniform draws with replacement inside each.
/// Throws EmptyPool if every negative class is empty.
KeySample sample_negative_keys(const KeyPool& pool, const DenseRepresentation& rep, int c,
                               const NegativeDistribution& dist, const SamplerConfig& cfg, Rng& rng);

/// Keeps pixels with confidence strictly above δ_w (and a defined label).
/// Returned pixel ids are offset by `pixel_offset`.
std::vector<GatedPixel> gate_pseudo_pixels(std::span<const double> confidence, std::span<const Label> pseudo_labels,
                                           double weak_threshold, std::size_t pixel_offset = 0);

/// Everything one evaluation of the ReCo loss consumes.
struct RecoSample {
    RelationGraph graph;
    std::vector<QueryBundle> bundles;
    std::map<int, Vector> positives;
    std::map<int, Matrix> negatives;
    std::map<int, std::vector<std::size_t>> negative_pixels;

    std::size_t sampled_vectors() const;
};

/// Class means, relation graph, and per-class query/key draws. Returns nullopt
/// when fewer than two classes have candidates.
std::optional<RecoSample> sample_reco_batch(const DenseRepresentation& rep, const PixelCandidateSet& candidates,
                                            std::size_t num_classes, const SamplerConfig& cfg, const Rng& rng);

/// Every candidate of each active class as a query and every candidate of the
/// other classes as a negative key. The reference point for the sampled
/// estimate; returns nullopt under the same rule as sample_reco_batch.
std::optional<RecoSample> exhaustive_reco_sample(const DenseRepresentation& rep, const PixelCandidateSet& candidates,
                                                 std::size_t num_classes);

/// Upper bound on vectors one ReCo evaluation touches.
inline std::size_t sampling_budget(std::size_t active_classes, const SamplerConfig& cfg) {
    return active_classes * static_cast<std::size_t>(cfg.num_queries + cfg.num_keys);
}

}  // namespace reco

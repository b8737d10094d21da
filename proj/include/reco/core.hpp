#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "reco/tensor.hpp"

namespace reco {

/// Per-pixel embeddings R. When `normalized` is set every row of data.values
/// has unit Euclidean norm.
struct DenseRepresentation {
    Tensor4 data;
    bool normalized = false;

    std::size_t dim() const { return data.channels(); }
};

/// Mean of the unit vectors labelled `class_id`. Not re-normalised.
struct ClassMean {
    int class_id = 0;
    Vector vector;
    std::size_t support = 0;
};

/// Sampled queries of one class. `pixel_ids` records the source row in the
/// representation so query gradients can be routed back to it.
struct QueryBundle {
    int class_id = 0;
    Matrix queries;
    std::vector<double> confidences;
    std::vector<std::size_t> pixel_ids;

    std::size_t size() const { return static_cast<std::size_t>(queries.rows()); }
};

/// Pairwise dot products of class means. Rows/cols are indexed by class id;
/// entries touching an inactive class, and the diagonal, are not meaningful.
struct RelationGraph {
    Matrix g;
    std::vector<int> active_classes;

    std::size_t num_classes() const { return static_cast<std::size_t>(g.rows()); }
    bool is_active(int c) const;
};

struct LossConfig {
    double temperature = 0.5;
    int num_queries = 256;
    int num_keys = 512;
    double strong_threshold = 0.97;
    double weak_threshold = 0.7;
    /// Off: positive keys are the plain class means.
    bool renormalize_positive = false;

    /// Throws ErrorKind::Config on τ ≤ 0, non-positive counts, or thresholds
    /// outside 0 < δ_w ≤ δ_s < 1.
    void validate() const;
};

struct NegativeDistribution {
    std::vector<int> classes;
    std::vector<double> probabilities;
};

struct RecoLossResult {
    double loss = 0.0;
    /// One matrix per input bundle, shaped like its queries.
    std::vector<Matrix> query_gradients;
};

/// Scales every pixel vector to unit norm. Throws ZeroVector if any pixel has
/// norm below 1e-12 and InvalidArgument on non-finite input.
DenseRepresentation normalize_pixels(Tensor4 raw);

/// Throws EmptyClass when no pixel carries label `c`; `labels` is one entry
/// per representation pixel.
ClassMean class_mean(const DenseRepresentation& rep, std::span<const Label> labels, int c);

/// `num_classes` sizes the matrix; class ids in `means` must be below it.
RelationGraph relation_graph(std::span<const ClassMean> means, std::size_t num_classes);

/// Softmax of G[c, ·] over the other active classes. Throws SingleClass when
/// `c` is the only active class.
NegativeDistribution negative_class_distribution(const RelationGraph& graph, int c);

/// Contrastive loss averaged over queries within a class, then over classes.
/// Positives and negatives are constants: the gradient covers the queries only.
RecoLossResult reco_loss(std::span<const QueryBundle> bundles,
                         const std::map<int, Vector>& positives,
                         const std::map<int, Matrix>& negatives,
                         const LossConfig& cfg);

}  // namespace reco

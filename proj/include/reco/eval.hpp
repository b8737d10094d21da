#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reco/core.hpp"
#include "reco/data.hpp"
#include "reco/io.hpp"
#include "reco/model.hpp"

namespace reco {

/// Rows are ground truth, columns predictions. Ignore-labelled truth pixels
/// are skipped.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes = 0);

    void add(std::span<const Label> truth, std::span<const Label> prediction);
    void merge(const ConfusionMatrix& other);

    int num_classes() const { return num_classes_; }
    std::uint64_t at(int truth, int prediction) const;
    std::uint64_t total() const;
    bool operator==(const ConfusionMatrix&) const = default;

private:
    int num_classes_ = 0;
    std::vector<std::uint64_t> counts_;
};

struct IouReport {
    /// Empty where TP + FP + FN = 0.
    std::vector<std::optional<double>> per_class;
    double mean = 0.0;
    std::size_t counted = 0;
};

IouReport mean_iou(const ConfusionMatrix& cm);

/// Argmax predictions of `params` on every image of `ds`; parallel over
/// images, merged in image order.
ConfusionMatrix evaluate_model(const ToyModelParams& params, const Dataset& ds, std::size_t threads = 1);

enum class EmbeddingKind { Encoder, Representation };
std::string_view to_string(EmbeddingKind k);
EmbeddingKind parse_embedding_kind(std::string_view s);

/// Mean embedding per class over all labelled pixels of `ds`, ascending class
/// id; absent classes are omitted.
std::vector<ClassMean> class_embeddings(const ToyModelParams& params, const Dataset& ds, EmbeddingKind kind);

/// Agglomerative clustering result. Nodes 0..n−1 are the leaves in input
/// order; merge k creates node n + k.
struct Dendrogram {
    struct Merge {
        int left = 0;
        int right = 0;
        double height = 0.0;
        /// Class ids under the new node, ascending.
        std::vector<int> members;
    };
    std::vector<int> leaves;
    std::vector<Merge> merges;

    int root() const { return static_cast<int>(leaves.size() + merges.size()) - 1; }
    double height(int node) const;
};

double cosine_distance(const Vector& a, const Vector& b);

/// Average linkage on cosine distance. At equal distance the pair whose
/// (smallest member id, smallest member id) is lexicographically lowest
/// merges first.
Dendrogram dendrogram(std::span<const ClassMean> means);

std::string to_newick(const Dendrogram& d);
Json to_json(const Dendrogram& d);
std::string relation_graph_csv(const RelationGraph& g);
std::string relation_graph_dot(const RelationGraph& g);
std::string iou_csv(const IouReport& r);

}  // namespace reco

#include "reco/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace reco {

bool RelationGraph::is_active(int c) const {
    return std::find(active_classes.begin(), active_classes.end(), c) != active_classes.end();
}

void LossConfig::validate() const {
    require(temperature > 0.0, ErrorKind::Config, "temperature must be positive");
    require(num_queries >= 1, ErrorKind::Config, "num_queries must be at least 1");
    require(num_keys >= 1, ErrorKind::Config, "num_keys must be at least 1");
    // weak_threshold == 1 is accepted as "gate closed": no pseudo pixel passes.
    require(weak_threshold > 0.0 && strong_threshold > 0.0 && strong_threshold < 1.0 &&
                (weak_threshold <= strong_threshold || weak_threshold == 1.0),
            ErrorKind::Config, "thresholds must satisfy 0 < weak_threshold <= strong_threshold < 1");
}

DenseRepresentation normalize_pixels(Tensor4 raw) {
    require(raw.channels() > 0, ErrorKind::DimensionMismatch, "embedding dimension must be positive");
    require(raw.values.allFinite(), ErrorKind::InvalidArgument, "representation has non-finite entries");
    for (Eigen::Index i = 0; i < raw.values.rows(); ++i) {
        const double n = raw.values.row(i).norm();
        if (n < 1e-12) fail(ErrorKind::ZeroVector, "pixel " + std::to_string(i) + " has zero norm");
        raw.values.row(i) /= n;
    }
    return DenseRepresentation{std::move(raw), true};
}

ClassMean class_mean(const DenseRepresentation& rep, std::span<const Label> labels, int c) {
    require(labels.size() == rep.data.pixels(), ErrorKind::DimensionMismatch, "label count differs from pixel count");
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(rep.dim()));
    std::size_t support = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != c) continue;
        sum += rep.data.values.row(static_cast<Eigen::Index>(i)).transpose();
        ++support;
    }
    if (support == 0) fail(ErrorKind::EmptyClass, "no pixel labelled " + std::to_string(c));
    return ClassMean{c, sum / static_cast<double>(support), support};
}

RelationGraph relation_graph(std::span<const ClassMean> means, std::size_t num_classes) {
    require(means.size() >= 2, ErrorKind::InvalidArgument, "relation graph needs at least two class means");
    RelationGraph graph;
    graph.g = Matrix::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(num_classes));
    for (const auto& m : means) {
        require(m.class_id >= 0 && static_cast<std::size_t>(m.class_id) < num_classes, ErrorKind::InvalidArgument,
                "class id out of range");
        require(!graph.is_active(m.class_id), ErrorKind::InvalidArgument, "duplicate class mean");
        require(m.vector.size() == means.front().vector.size(), ErrorKind::DimensionMismatch, "class means differ in length");
        graph.active_classes.push_back(m.class_id);
    }
    std::sort(graph.active_classes.begin(), graph.active_classes.end());
    for (std::size_t a = 0; a < means.size(); ++a) {
        for (std::size_t b = a + 1; b < means.size(); ++b) {
            const double d = means[a].vector.dot(means[b].vector);
            graph.g(means[a].class_id, means[b].class_id) = d;
            graph.g(means[b].class_id, means[a].class_id) = d;
        }
    }
    return graph;
}

NegativeDistribution negative_class_distribution(const RelationGraph& graph, int c) {
    require(graph.is_active(c), ErrorKind::InvalidArgument, "class " + std::to_string(c) + " is not active");
    NegativeDistribution dist;
    for (int k : graph.active_classes)
        if (k != c) dist.classes.push_back(k);
    if (dist.classes.empty()) fail(ErrorKind::SingleClass, "class " + std::to_string(c) + " is the only active class");

    double peak = -std::numeric_limits<double>::infinity();
    for (int k : dist.classes) peak = std::max(peak, graph.g(c, k));
    double total = 0.0;
    for (int k : dist.classes) {
        dist.probabilities.push_back(std::exp(graph.g(c, k) - peak));
        total += dist.probabilities.back();
    }
    for (auto& p : dist.probabilities) p /= total;
    return dist;
}

RecoLossResult reco_loss(std::span<const QueryBundle> bundles,
                         const std::map<int, Vector>& positives,
                         const std::map<int, Matrix>& negatives,
                         const LossConfig& cfg) {
    require(cfg.temperature > 0.0, ErrorKind::Config, "temperature must be positive");
    RecoLossResult result;
    result.query_gradients.reserve(bundles.size());

    std::size_t classes_used = 0;
    for (const auto& b : bundles)
        if (b.size() > 0) ++classes_used;

    const double inv_t = 1.0 / cfg.temperature;
    for (const auto& bundle : bundles) {
        Matrix grad = Matrix::Zero(bundle.queries.rows(), bundle.queries.cols());
        if (bundle.size() == 0) {
            result.query_gradients.push_back(std::move(grad));
            continue;
        }
        const auto m = bundle.queries.cols();
        auto pos_it = positives.find(bundle.class_id);
        if (pos_it == positives.end())
            fail(ErrorKind::EmptyClass, "no positive key for class " + std::to_string(bundle.class_id));
        auto neg_it = negatives.find(bundle.class_id);
        if (neg_it == negatives.end() || neg_it->second.rows() == 0)
            fail(ErrorKind::EmptyNegatives, "no negative keys for class " + std::to_string(bundle.class_id));
        Vector positive = pos_it->second;
        const Matrix& keys = neg_it->second;
        require(positive.size() == m && keys.cols() == m, ErrorKind::DimensionMismatch,
                "query, positive and negative dimensions differ for class " + std::to_string(bundle.class_id));
        if (cfg.renormalize_positive) {
            const double n = positive.norm();
            if (n < 1e-12) fail(ErrorKind::ZeroVector, "positive key has zero norm");
            positive /= n;
        }

        const Vector pos_logit = (bundle.queries * positive) * inv_t;
        const Matrix neg_logit = (bundle.queries * keys.transpose()) * inv_t;
        const double scale = 1.0 / (static_cast<double>(classes_used) * static_cast<double>(bundle.size()));

        double class_loss = 0.0;
        for (Eigen::Index q = 0; q < bundle.queries.rows(); ++q) {
            const double peak = std::max(pos_logit(q), neg_logit.row(q).maxCoeff());
            const double w_pos = std::exp(pos_logit(q) - peak);
            const RowVector w_neg = (neg_logit.row(q).array() - peak).exp().matrix();
            const double z = w_pos + w_neg.sum();
            class_loss += std::log(z) + peak - pos_logit(q);
            // d/dq [logsumexp(s) - s_0] = (1/τ)(Σ_j p_j k_j - k_0), k_0 = positive.
            grad.row(q) = ((w_pos / z - 1.0) * positive.transpose() + (w_neg / z) * keys) * (inv_t * scale);
        }
        result.loss += class_loss * scale;
        result.query_gradients.push_back(std::move(grad));
    }
    return result;
}

}  // namespace reco

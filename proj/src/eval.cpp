#include "reco/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "reco/parallel.hpp"

namespace reco {

namespace {

std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes), counts_(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0) {}

void ConfusionMatrix::add(std::span<const Label> truth, std::span<const Label> prediction) {
    require(truth.size() == prediction.size(), ErrorKind::DimensionMismatch, "truth and prediction sizes differ");
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == kIgnoreLabel) continue;
        require(truth[i] < num_classes_ && prediction[i] < num_classes_, ErrorKind::InvalidArgument,
                "label out of range in confusion matrix");
        ++counts_[static_cast<std::size_t>(truth[i]) * static_cast<std::size_t>(num_classes_) + prediction[i]];
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    require(other.num_classes_ == num_classes_, ErrorKind::DimensionMismatch, "confusion matrices differ in size");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::at(int truth, int prediction) const {
    return counts_[static_cast<std::size_t>(truth) * static_cast<std::size_t>(num_classes_) + static_cast<std::size_t>(prediction)];
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

IouReport mean_iou(const ConfusionMatrix& cm) {
    IouReport r;
    const int n = cm.num_classes();
    double sum = 0.0;
    for (int c = 0; c < n; ++c) {
        std::uint64_t row = 0, col = 0;
        for (int k = 0; k < n; ++k) {
            row += cm.at(c, k);
            col += cm.at(k, c);
        }
        const std::uint64_t tp = cm.at(c, c);
        const std::uint64_t denom = row + col - tp;
        if (denom == 0) {
            r.per_class.emplace_back();
            continue;
        }
        const double iou = static_cast<double>(tp) / static_cast<double>(denom);
        r.per_class.emplace_back(iou);
        sum += iou;
        ++r.counted;
    }
    r.mean = r.counted == 0 ? 0.0 : sum / static_cast<double>(r.counted);
    return r;
}

ConfusionMatrix evaluate_model(const ToyModelParams& params, const Dataset& ds, std::size_t threads) {
    const int c = params.config().num_classes;
    std::vector<ConfusionMatrix> parts(ds.size(), ConfusionMatrix(c));
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        const Image& img = ds.images[i];
        const auto fwd = forward(params, stack_images(std::span<const Image>(&img, 1)), ForwardMode::Eval);
        parts[i].add(ds.labels[i].values, confidence_and_pseudo(fwd.logits).labels);
    });
    ConfusionMatrix cm(c);
    for (const auto& p : parts) cm.merge(p);
    return cm;
}

std::string_view to_string(EmbeddingKind k) { return k == EmbeddingKind::Encoder ? "encoder" : "representation"; }

EmbeddingKind parse_embedding_kind(std::string_view s) {
    if (s == "encoder") return EmbeddingKind::Encoder;
    if (s == "representation") return EmbeddingKind::Representation;
    fail(ErrorKind::Config, "unknown embedding '" + std::string(s) + "' (encoder or representation)");
}

std::vector<ClassMean> class_embeddings(const ToyModelParams& params, const Dataset& ds, EmbeddingKind kind) {
    require(ds.size() > 0, ErrorKind::InvalidArgument, "validation set is empty");
    const int c = params.config().num_classes;
    std::vector<Vector> sums;
    std::vector<std::size_t> support(static_cast<std::size_t>(c), 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Image& img = ds.images[i];
        const auto fwd = forward(params, stack_images(std::span<const Image>(&img, 1)),
                                 kind == EmbeddingKind::Encoder ? ForwardMode::Eval : ForwardMode::Train);
        const Matrix& e = kind == EmbeddingKind::Encoder ? fwd.features.values : fwd.representation->data.values;
        if (sums.empty()) sums.assign(static_cast<std::size_t>(c), Vector::Zero(e.cols()));
        const auto& labels = ds.labels[i].values;
        for (std::size_t p = 0; p < labels.size(); ++p) {
            if (labels[p] == kIgnoreLabel || labels[p] >= c) continue;
            sums[labels[p]] += e.row(static_cast<Eigen::Index>(p)).transpose();
            ++support[labels[p]];
        }
    }
    std::vector<ClassMean> out;
    for (int k = 0; k < c; ++k) {
        const auto s = support[static_cast<std::size_t>(k)];
        if (s == 0) continue;
        out.push_back(ClassMean{k, sums[static_cast<std::size_t>(k)] / static_cast<double>(s), s});
    }
    return out;
}

double Dendrogram::height(int node) const {
    const int n = static_cast<int>(leaves.size());
    return node < n ? 0.0 : merges[static_cast<std::size_t>(node - n)].height;
}

double cosine_distance(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), ErrorKind::DimensionMismatch, "cosine distance of vectors of different length");
    const double na = a.norm();
    const double nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) fail(ErrorKind::ZeroVector, "cosine distance of a zero vector");
    return 1.0 - a.dot(b) / (na * nb);
}

Dendrogram dendrogram(std::span<const ClassMean> means) {
    require(means.size() >= 2, ErrorKind::InvalidArgument, "dendrogram needs at least two classes");
    const std::size_t n = means.size();
    Dendrogram d;
    Matrix dist(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
        d.leaves.push_back(means[a].class_id);
        for (std::size_t b = 0; b < n; ++b)
            dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = cosine_distance(means[a].vector, means[b].vector);
    }

    struct Cluster {
        int node;
        std::vector<std::size_t> items;
        int min_id;
    };
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < n; ++i) active.push_back({static_cast<int>(i), {i}, means[i].class_id});

    while (active.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::pair<int, int> best_key{0, 0};
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < active.size(); ++i)
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                double s = 0.0;
                for (auto p : active[i].items)
                    for (auto q : active[j].items) s += dist(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
                const double avg = s / static_cast<double>(active[i].items.size() * active[j].items.size());
                const std::pair<int, int> key = std::minmax(active[i].min_id, active[j].min_id);
                if (avg < best || (avg == best && key < best_key)) {
                    best = avg;
                    best_key = key;
                    bi = i;
                    bj = j;
                }
            }
        if (active[bj].min_id < active[bi].min_id) std::swap(bi, bj);
        Cluster merged{static_cast<int>(n + d.merges.size()), active[bi].items, std::min(active[bi].min_id, active[bj].min_id)};
        merged.items.insert(merged.items.end(), active[bj].items.begin(), active[bj].items.end());
        Dendrogram::Merge m{active[bi].node, active[bj].node, best, {}};
        for (auto it : merged.items) m.members.push_back(means[it].class_id);
        std::sort(m.members.begin(), m.members.end());
        d.merges.push_back(std::move(m));
        const auto hi = std::max(bi, bj), lo = std::min(bi, bj);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(hi));
        active[lo] = std::move(merged);
    }
    return d;
}

std::string to_newick(const Dendrogram& d) {
    const int n = static_cast<int>(d.leaves.size());
    std::function<std::string(int, double)> emit = [&](int node, double parent_height) {
        const double len = parent_height - d.height(node);
        if (node < n) return std::to_string(d.leaves[static_cast<std::size_t>(node)]) + ":" + number(len);
        const auto& m = d.merges[static_cast<std::size_t>(node - n)];
        return "(" + emit(m.left, m.height) + "," + emit(m.right, m.height) + "):" + number(len);
    };
    const auto& m = d.merges.back();
    return "(" + emit(m.left, m.height) + "," + emit(m.right, m.height) + ");";
}

Json to_json(const Dendrogram& d) {
    Json merges = Json::array();
    const int n = static_cast<int>(d.leaves.size());
    for (std::size_t k = 0; k < d.merges.size(); ++k) {
        const auto& m = d.merges[k];
        merges.push_back({{"node", n + static_cast<int>(k)},
                          {"left", m.left},
                          {"right", m.right},
                          {"height", m.height},
                          {"members", m.members}});
    }
    return {{"linkage", "average"}, {"distance", "cosine"}, {"leaves", d.leaves}, {"merges", std::move(merges)}};
}

std::string relation_graph_csv(const RelationGraph& g) {
    // Diagonal and inactive entries are left blank.
    const auto c = static_cast<int>(g.num_classes());
    std::ostringstream out;
    out << "class";
    for (int q = 0; q < c; ++q) out << ',' << q;
    out << '\n';
    for (int p = 0; p < c; ++p) {
        out << p;
        for (int q = 0; q < c; ++q) {
            out << ',';
            if (p != q && g.is_active(p) && g.is_active(q)) out << number(g.g(p, q));
        }
        out << '\n';
    }
    return out.str();
}

std::string relation_graph_dot(const RelationGraph& g) {
    std::ostringstream out;
    out << "graph relation {\n";
    for (int p : g.active_classes) out << "  " << p << ";\n";
    for (std::size_t a = 0; a < g.active_classes.size(); ++a)
        for (std::size_t b = a + 1; b < g.active_classes.size(); ++b) {
            const int p = g.active_classes[a], q = g.active_classes[b];
            const auto w = number(g.g(p, q));
            out << "  " << p << " -- " << q << " [weight=" << w << ", label=\"" << w << "\"];\n";
        }
    out << "}\n";
    return out.str();
}

std::string iou_csv(const IouReport& r) {
    std::ostringstream out;
    out << "class,iou\n";
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        out << c << ',';
        if (r.per_class[c]) out << number(*r.per_class[c]);
        out << '\n';
    }
    out << "mean," << number(r.mean) << '\n';
    return out.str();
}

}  // namespace reco

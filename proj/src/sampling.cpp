#include "reco/sampling.hpp"

#include <numeric>
#include <string>

namespace reco {

std::string_view to_string(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::Active: return "active";
        case SamplingStrategy::RandomQueryRandomKey: return "random_query_random_key";
        case SamplingStrategy::ActiveQueryRandomKey: return "active_query_random_key";
        case SamplingStrategy::EasyQueryActiveKey: return "easy_query_active_key";
    }
    return "active";
}

SamplingStrategy parse_sampling_strategy(std::string_view name) {
    for (auto s : {SamplingStrategy::Active, SamplingStrategy::RandomQueryRandomKey,
                   SamplingStrategy::ActiveQueryRandomKey, SamplingStrategy::EasyQueryActiveKey})
        if (to_string(s) == name) return s;
    fail(ErrorKind::Config, "unknown sampling strategy '" + std::string(name) + "'");
}

SamplerConfig SamplerConfig::from_loss(const LossConfig& loss, std::uint64_t seed, SamplingStrategy strategy) {
    return SamplerConfig{loss.num_queries, loss.num_keys, loss.strong_threshold, loss.weak_threshold, seed, strategy};
}

std::size_t PixelCandidateSet::total() const {
    std::size_t n = 0;
    for (const auto& [c, v] : by_class) n += v.size();
    return n;
}

std::vector<int> PixelCandidateSet::active_classes() const {
    std::vector<int> out;
    for (const auto& [c, v] : by_class)
        if (!v.empty()) out.push_back(c);
    return out;
}

KeyPool KeyPool::from_candidates(const PixelCandidateSet& candidates) {
    KeyPool pool;
    for (const auto& [c, list] : candidates.by_class) {
        auto& dst = pool.pixels_by_class[c];
        dst.reserve(list.size());
        for (const auto& p : list) dst.push_back(p.pixel);
    }
    return pool;
}

EasyHardSplit split_easy_hard(std::span<const double> confidences, double strong_threshold) {
    EasyHardSplit split;
    for (std::size_t i = 0; i < confidences.size(); ++i)
        (confidences[i] > strong_threshold ? split.easy : split.hard).push_back(i);
    return split;
}

namespace {

// Moves `count` uniformly chosen elements of `pool` to its front (partial
// Fisher-Yates) and appends them to `out`.
void draw_without_replacement(std::vector<std::size_t>& pool, std::size_t count, Rng& rng,
                              std::vector<std::size_t>& out) {
    count = std::min(count, pool.size());
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
}

}  // namespace

QueryBundle sample_queries(const PixelCandidateSet& candidates, const DenseRepresentation& rep, int c,
                           const SamplerConfig& cfg, Rng& rng) {
    auto it = candidates.by_class.find(c);
    if (it == candidates.by_class.end() || it->second.empty())
        fail(ErrorKind::EmptyClass, "no query candidates for class " + std::to_string(c));
    const auto& list = it->second;

    std::vector<double> conf(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) conf[i] = list[i].confidence;
    auto split = split_easy_hard(conf, cfg.strong_threshold);

    std::vector<std::size_t> primary;
    std::vector<std::size_t> secondary;
    switch (cfg.strategy) {
        case SamplingStrategy::Active:
        case SamplingStrategy::ActiveQueryRandomKey:
            primary = std::move(split.hard);
            secondary = std::move(split.easy);
            break;
        case SamplingStrategy::EasyQueryActiveKey:
            primary = std::move(split.easy);
            secondary = std::move(split.hard);
            break;
        case SamplingStrategy::RandomQueryRandomKey:
            primary.resize(list.size());
            std::iota(primary.begin(), primary.end(), std::size_t{0});
            break;
    }

    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(cfg.num_queries), list.size());
    std::vector<std::size_t> chosen;
    chosen.reserve(want);
    draw_without_replacement(primary, want, rng, chosen);
    if (chosen.size() < want) draw_without_replacement(secondary, want - chosen.size(), rng, chosen);

    QueryBundle bundle;
    bundle.class_id = c;
    bundle.queries.resize(static_cast<Eigen::Index>(chosen.size()), static_cast<Eigen::Index>(rep.dim()));
    for (std::size_t r = 0; r < chosen.size(); ++r) {
        const auto& cand = list[chosen[r]];
        bundle.queries.row(static_cast<Eigen::Index>(r)) = rep.data.values.row(static_cast<Eigen::Index>(cand.pixel));
        bundle.confidences.push_back(cand.confidence);
        bundle.pixel_ids.push_back(cand.pixel);
    }
    return bundle;
}

KeySample sample_negative_keys(const KeyPool& pool, const DenseRepresentation& rep, int c,
                               const NegativeDistribution& dist, const SamplerConfig& cfg, Rng& rng) {
    auto pool_size = [&](int k) -> std::size_t {
        auto it = pool.pixels_by_class.find(k);
        return it == pool.pixels_by_class.end() ? 0 : it->second.size();
    };

    std::vector<int> classes;
    std::vector<double> weights;
    const bool random_keys = cfg.strategy == SamplingStrategy::RandomQueryRandomKey ||
                             cfg.strategy == SamplingStrategy::ActiveQueryRandomKey;
    if (random_keys) {
        // Uniform over all negative pixels.
        for (const auto& [k, ids] : pool.pixels_by_class) {
            if (k == c || ids.empty()) continue;
            classes.push_back(k);
            weights.push_back(static_cast<double>(ids.size()));
        }
    } else {
        require(dist.classes.size() == dist.probabilities.size(), ErrorKind::DimensionMismatch,
                "distribution classes and probabilities differ in length");
        for (std::size_t i = 0; i < dist.classes.size(); ++i) {
            require(dist.classes[i] != c, ErrorKind::InvalidArgument, "negative distribution contains the query class");
            if (pool_size(dist.classes[i]) == 0) continue;
            classes.push_back(dist.classes[i]);
            weights.push_back(dist.probabilities[i]);
        }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    if (classes.empty() || !(total > 0.0)) fail(ErrorKind::EmptyPool, "no negative keys for class " + std::to_string(c));

    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i] / total;
        cdf[i] = acc;
    }
    std::vector<std::size_t> alloc(classes.size(), 0);
    for (int n = 0; n < cfg.num_keys; ++n) {
        const double u = rng.uniform();
        std::size_t k = 0;
        while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
        ++alloc[k];
    }

    KeySample out;
    out.keys.resize(cfg.num_keys, static_cast<Eigen::Index>(rep.dim()));
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& ids = pool.pixels_by_class.at(classes[i]);
        for (std::size_t n = 0; n < alloc[i]; ++n) {
            const std::size_t pixel = ids[rng.below(ids.size())];
            out.keys.row(row++) = rep.data.values.row(static_cast<Eigen::Index>(pixel));
            out.pixel_ids.push_back(pixel);
            out.source_classes.push_back(classes[i]);
        }
    }
    return out;
}

std::vector<GatedPixel> gate_pseudo_pixels(std::span<const double> confidence, std::span<const Label> pseudo_labels,
                                           double weak_threshold, std::size_t pixel_offset) {
    require(confidence.size() == pseudo_labels.size(), ErrorKind::DimensionMismatch,
            "confidence and pseudo-label maps differ in size");
    std::vector<GatedPixel> kept;
    for (std::size_t i = 0; i < confidence.size(); ++i)
        if (confidence[i] > weak_threshold && pseudo_labels[i] != kIgnoreLabel)
            kept.push_back(GatedPixel{i + pixel_offset, pseudo_labels[i], confidence[i]});
    return kept;
}

std::size_t RecoSample::sampled_vectors() const {
    std::size_t n = 0;
    for (const auto& b : bundles) n += b.size();
    for (const auto& [c, k] : negatives) n += static_cast<std::size_t>(k.rows());
    return n;
}

std::optional<RecoSample> sample_reco_batch(const DenseRepresentation& rep, const PixelCandidateSet& candidates,
                                            std::size_t num_classes, const SamplerConfig& cfg, const Rng& rng) {
    const auto active = candidates.active_classes();
    if (active.size() < 2) return std::nullopt;

    std::vector<Label> mask(rep.data.pixels(), kIgnoreLabel);
    for (int c : active)
        for (const auto& p : candidates.by_class.at(c)) mask[p.pixel] = static_cast<Label>(c);

    RecoSample sample;
    std::vector<ClassMean> means;
    for (int c : active) means.push_back(class_mean(rep, mask, c));
    sample.graph = relation_graph(means, num_classes);
    for (const auto& m : means) sample.positives[m.class_id] = m.vector;

    const auto pool = KeyPool::from_candidates(candidates);
    for (int c : active) {
        // Per-class streams keep draws independent of class iteration order.
        Rng query_rng = rng.fork({static_cast<std::uint64_t>(c), 1});
        Rng key_rng = rng.fork({static_cast<std::uint64_t>(c), 2});
        sample.bundles.push_back(sample_queries(candidates, rep, c, cfg, query_rng));
        const auto dist = negative_class_distribution(sample.graph, c);
        auto keys = sample_negative_keys(pool, rep, c, dist, cfg, key_rng);
        sample.negatives[c] = std::move(keys.keys);
        sample.negative_pixels[c] = std::move(keys.pixel_ids);
    }
    return sample;
}

std::optional<RecoSample> exhaustive_reco_sample(const DenseRepresentation& rep, const PixelCandidateSet& candidates,
                                                 std::size_t num_classes) {
    const auto active = candidates.active_classes();
    if (active.size() < 2) return std::nullopt;

    std::vector<Label> mask(rep.data.pixels(), kIgnoreLabel);
    for (int c : active)
        for (const auto& p : candidates.by_class.at(c)) mask[p.pixel] = static_cast<Label>(c);

    RecoSample sample;
    std::vector<ClassMean> means;
    for (int c : active) means.push_back(class_mean(rep, mask, c));
    sample.graph = relation_graph(means, num_classes);
    for (const auto& m : means) sample.positives[m.class_id] = m.vector;

    auto rows = [&](const std::vector<std::size_t>& ids) {
        Matrix out(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(rep.dim()));
        for (std::size_t i = 0; i < ids.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = rep.data.values.row(static_cast<Eigen::Index>(ids[i]));
        return out;
    };
    for (int c : active) {
        QueryBundle b;
        b.class_id = c;
        std::vector<std::size_t> negatives;
        for (std::size_t p = 0; p < mask.size(); ++p) {
            if (mask[p] == kIgnoreLabel) continue;
            if (mask[p] == c) {
                b.pixel_ids.push_back(p);
            } else {
                negatives.push_back(p);
            }
        }
        std::map<std::size_t, double> conf;
        for (const auto& cand : candidates.by_class.at(c)) conf[cand.pixel] = cand.confidence;
        for (auto p : b.pixel_ids) b.confidences.push_back(conf.at(p));
        b.queries = rows(b.pixel_ids);
        sample.negatives[c] = rows(negatives);
        sample.negative_pixels[c] = std::move(negatives);
        sample.bundles.push_back(std::move(b));
    }
    return sample;
}

}  // namespace reco

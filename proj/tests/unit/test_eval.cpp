#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "reco/eval.hpp"

using namespace reco;

namespace {

ClassMean mean_of(int id, std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    std::size_t i = 0;
    for (double d : v) x(static_cast<Eigen::Index>(i++)) = d;
    return ClassMean{id, x, 1};
}

}  // namespace

TEST_CASE("mean IoU worked examples") {
    ConfusionMatrix cm(3);
    const std::vector<Label> truth{0, 0, 1, 1, kIgnoreLabel};
    const std::vector<Label> pred{0, 1, 1, 1, 2};
    cm.add(truth, pred);
    CHECK(cm.total() == 4);
    const auto r = mean_iou(cm);
    CHECK(r.counted == 2);
    CHECK(*r.per_class[0] == doctest::Approx(0.5));
    CHECK(*r.per_class[1] == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(r.per_class[2].has_value());
    CHECK(r.mean == doctest::Approx(7.0 / 12.0).epsilon(1e-15));

    ConfusionMatrix perfect(4);
    perfect.add(std::vector<Label>{0, 1, 2, 3}, std::vector<Label>{0, 1, 2, 3});
    CHECK(mean_iou(perfect).mean == 1.0);

    ConfusionMatrix wrong(2);
    wrong.add(std::vector<Label>{0, 0}, std::vector<Label>{1, 1});
    CHECK(mean_iou(wrong).mean == 0.0);
    CHECK_THROWS_AS(cm.add(truth, std::vector<Label>{0}), Error);
}

TEST_CASE("mean IoU matches a brute-force count and is label-permutation invariant") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const int c = 2 + static_cast<int>(rng.below(6));
        auto truth = fixture::random_labels(rng, 300, c);
        auto pred = fixture::random_labels(rng, 300, c);
        for (std::size_t i = 0; i < 300; i += 7) truth[i] = kIgnoreLabel;
        for (std::size_t i = 0; i < 300; i += 3) pred[i] = truth[i] == kIgnoreLabel ? 0 : truth[i];
        ConfusionMatrix cm(c);
        cm.add(truth, pred);
        const auto r = mean_iou(cm);
        const auto o = oracle::brute_iou(truth, pred, c);
        CHECK(std::abs(r.mean - o.mean) <= 1e-12);
        for (int k = 0; k < c; ++k) {
            if (std::isnan(o.per_class[static_cast<std::size_t>(k)]))
                CHECK_FALSE(r.per_class[static_cast<std::size_t>(k)].has_value());
            else
                CHECK(std::abs(*r.per_class[static_cast<std::size_t>(k)] - o.per_class[static_cast<std::size_t>(k)]) <= 1e-12);
        }

        std::vector<Label> perm(static_cast<std::size_t>(c));
        std::iota(perm.begin(), perm.end(), Label{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        auto remap = [&](std::vector<Label> v) {
            for (auto& l : v)
                if (l != kIgnoreLabel) l = perm[l];
            return v;
        };
        ConfusionMatrix permuted(c);
        permuted.add(remap(truth), remap(pred));
        CHECK(std::abs(mean_iou(permuted).mean - r.mean) <= 1e-12);
    }
}

TEST_CASE("confusion matrices merge") {
    ConfusionMatrix a(3), b(3), whole(3);
    const std::vector<Label> t1{0, 1, 2}, p1{0, 2, 2}, t2{1, 1}, p2{1, 0};
    a.add(t1, p1);
    b.add(t2, p2);
    whole.add(t1, p1);
    whole.add(t2, p2);
    a.merge(b);
    CHECK(a == whole);
    CHECK_THROWS_AS(a.merge(ConfusionMatrix(4)), Error);
}

TEST_CASE("dendrogram worked examples") {
    SUBCASE("closest pair merges first") {
        const std::vector<ClassMean> means{mean_of(0, {1, 0}), mean_of(1, {1, 0.1}), mean_of(2, {0, 1})};
        const auto d = dendrogram(means);
        REQUIRE(d.merges.size() == 2);
        CHECK(d.merges[0].members == std::vector<int>{0, 1});
        CHECK(d.merges[0].left == 0);
        CHECK(d.merges[0].right == 1);
        CHECK(d.merges[0].height == doctest::Approx(1.0 - 1.0 / std::sqrt(1.01)));
        CHECK(d.merges[1].members == std::vector<int>{0, 1, 2});
        CHECK(d.merges[1].height == doctest::Approx((1.0 + (1.0 - 0.1 / std::sqrt(1.01))) / 2.0));
        CHECK(d.root() == 4);
    }
    SUBCASE("ties go to the lowest class ids") {
        const std::vector<ClassMean> means{mean_of(3, {0, 0, 0, 1}), mean_of(1, {0, 1, 0, 0}),
                                           mean_of(2, {0, 0, 1, 0}), mean_of(0, {1, 0, 0, 0})};
        const auto d = dendrogram(means);
        CHECK(d.merges[0].members == std::vector<int>{0, 1});
        CHECK(d.merges[1].members == std::vector<int>{0, 1, 2});
        CHECK(d.merges[2].members == std::vector<int>{0, 1, 2, 3});
        for (const auto& m : d.merges) CHECK(m.height == 1.0);
    }
    CHECK_THROWS_AS(dendrogram(std::vector<ClassMean>{mean_of(0, {1, 0})}), Error);
}

TEST_CASE("dendrogram agrees with a Lance-Williams oracle") {
    Rng rng(2);
    for (int c = 2; c <= 8; ++c) {
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<ClassMean> means;
            std::vector<int> ids;
            oracle::Rows rows;
            for (int k = 0; k < c; ++k) {
                means.push_back(ClassMean{k, fixture::random_matrix(rng, 5, 1).col(0), 1});
                ids.push_back(k);
                rows.push_back(oracle::vec_of(means.back().vector));
            }
            const auto d = dendrogram(means);
            const auto o = oracle::average_linkage(ids, rows);
            REQUIRE(d.merges.size() == o.size());
            double prev = -1.0;
            for (std::size_t k = 0; k < o.size(); ++k) {
                CHECK(d.merges[k].members == o[k].members);
                CHECK(std::abs(d.merges[k].height - o[k].height) <= 1e-10);
                CHECK(d.merges[k].height >= prev - 1e-12);
                prev = d.merges[k].height;
            }
        }
    }
}

TEST_CASE("exporters") {
    const std::vector<ClassMean> means{mean_of(0, {1, 0}), mean_of(1, {0, 1}), mean_of(2, {1, 1})};
    const auto d = dendrogram(means);
    const auto nwk = to_newick(d);
    CHECK(nwk.front() == '(');
    CHECK(nwk.substr(nwk.size() - 2) == ");");
    for (const char* leaf : {"0:", "1:", "2:"}) CHECK(nwk.find(leaf) != std::string::npos);
    CHECK(std::count(nwk.begin(), nwk.end(), '(') == 2);

    const auto j = to_json(d);
    CHECK(j["linkage"] == "average");
    CHECK(j["merges"].size() == 2);
    CHECK(j["merges"][1]["node"] == 4);

    const auto g = relation_graph(std::vector<ClassMean>{mean_of(0, {1, 0}), mean_of(2, {0.5, 0.5})}, 3);
    CHECK(relation_graph_csv(g) == "class,0,1,2\n0,,,0.5\n1,,,\n2,0.5,,\n");
    const auto dot = relation_graph_dot(g);
    CHECK(dot.rfind("graph relation {", 0) == 0);
    CHECK(dot.find("0 -- 2 [weight=0.5, label=\"0.5\"];") != std::string::npos);

    IouReport r{{0.5, std::nullopt}, 0.5, 1};
    CHECK(iou_csv(r) == "class,iou\n0,0.5\n1,\nmean,0.5\n");
}

TEST_CASE("class embeddings match a per-pixel loop") {
    SynthSpec spec;
    spec.height = 10;
    spec.width = 10;
    spec.train_count = 1;
    spec.val_count = 3;
    spec.seed = 8;
    const auto data = generate_synthetic(spec);
    Rng rng(3);
    const auto params = ToyModelParams::initialize(ModelConfig{4, 6}, rng);
    for (auto kind : {EmbeddingKind::Encoder, EmbeddingKind::Representation}) {
        const auto means = class_embeddings(params, data.val, kind);
        for (const auto& m : means) {
            Vector sum = Vector::Zero(m.vector.size());
            std::size_t n = 0;
            for (std::size_t i = 0; i < data.val.size(); ++i) {
                const auto out = forward(params, stack_images(std::span<const Image>(&data.val.images[i], 1)));
                const Matrix& e = kind == EmbeddingKind::Encoder ? out.features.values : out.representation->data.values;
                for (std::size_t p = 0; p < data.val.labels[i].size(); ++p)
                    if (data.val.labels[i].values[p] == m.class_id) {
                        sum += e.row(static_cast<Eigen::Index>(p)).transpose();
                        ++n;
                    }
            }
            CHECK(n == m.support);
            CHECK((sum / static_cast<double>(n) - m.vector).norm() <= 1e-12);
        }
        CHECK(means.front().vector.size() == (kind == EmbeddingKind::Encoder ? 32 : 6));
    }
    CHECK(parse_embedding_kind("encoder") == EmbeddingKind::Encoder);
    CHECK_THROWS_AS(parse_embedding_kind("z"), Error);
}

TEST_CASE("evaluate_model is thread-count independent") {
    SynthSpec spec;
    spec.height = 10;
    spec.width = 10;
    spec.train_count = 1;
    spec.val_count = 6;
    const auto data = generate_synthetic(spec);
    Rng rng(4);
    const auto params = ToyModelParams::initialize(ModelConfig{4, 6}, rng);
    const auto a = evaluate_model(params, data.val, 1);
    CHECK(a == evaluate_model(params, data.val, 3));
    CHECK(a.total() == 600);
}

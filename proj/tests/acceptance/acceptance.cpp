// Acceptance checks. One PASS/FAIL line per criterion; exit status is
// non-zero if any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <iostream>
#include <set>
#include <sstream>

#include "reco/cli.hpp"
#include "reco/parallel.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace reco;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Settings {
    fs::path work = fs::temp_directory_path() / "reco_acceptance";
    int seeds = 5;
    int iters = 2000;
    double base_lr = 0.02;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity(const Settings&) {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr double h = 1e-5;
    constexpr double tol = 1e-4;
    double worst_loss = 0.0, worst_model = 0.0;
    std::size_t loss_checks = 0, model_checks = 0, failures = 0, kinks = 0;

    // reco_loss w.r.t. every query coordinate
    for (std::uint64_t inst = 0; inst < 100; ++inst) {
        Rng rng = Rng(2024).fork({1, inst});
        const int classes = 2 + static_cast<int>(rng.below(4));
        const Eigen::Index m = 3 + static_cast<Eigen::Index>(rng.below(6));
        std::vector<QueryBundle> bundles;
        std::map<int, Vector> pos;
        std::map<int, Matrix> neg;
        for (int c = 0; c < classes; ++c) {
            QueryBundle b;
            b.class_id = c;
            b.queries = fixture::random_unit_rows(rng, 1 + static_cast<Eigen::Index>(rng.below(4)), m);
            bundles.push_back(b);
            pos[c] = fixture::random_unit_rows(rng, 5, m).colwise().mean().transpose();
            neg[c] = fixture::random_unit_rows(rng, 2 + static_cast<Eigen::Index>(rng.below(10)), m);
        }
        LossConfig cfg;
        cfg.temperature = 0.1 + 0.9 * rng.uniform();
        const auto res = reco_loss(bundles, pos, neg, cfg);
        for (std::size_t k = 0; k < bundles.size(); ++k)
            for (Eigen::Index i = 0; i < bundles[k].queries.size(); ++i) {
                double& x = bundles[k].queries.data()[i];
                const double fd = oracle::central_difference([&] { return reco_loss(bundles, pos, neg, cfg).loss; }, x, h);
                const double err = oracle::relative_error(res.query_gradients[k].data()[i], fd);
                worst_loss = std::max(worst_loss, err);
                ++loss_checks;
                failures += err >= tol;
            }
    }

    // cross-entropy + ReCo of the toy model w.r.t. 20 random parameters
    SynthSpec spec;
    spec.height = 12;
    spec.width = 12;
    spec.train_count = 200;
    spec.val_count = 1;
    spec.seed = 7;
    const auto data = generate_synthetic(spec);
    const ModelConfig model{4, 8};
    for (std::uint64_t inst = 0; inst < 100; ++inst) {
        Rng rng = Rng(2024).fork({2, inst});
        auto params = ToyModelParams::initialize(model, rng);
        params.for_each([&](std::string_view, Matrix& w) {
            if (w.rows() == 1) w = fixture::random_matrix(rng, 1, w.cols()) * 0.1;
        });
        const std::vector<Image> imgs{data.train.images[2 * inst], data.train.images[2 * inst + 1]};
        const std::vector<LabelMap> labs{data.train.labels[2 * inst], data.train.labels[2 * inst + 1]};
        const Tensor4 x = stack_images(imgs);
        const auto y = stack_labels(labs);
        const auto fwd = forward(params, x);
        PixelCandidateSet candidates;
        add_labelled_candidates(candidates, y, softmax_rows(fwd.logits.values), 0);
        LossConfig loss;
        loss.num_queries = 8;
        loss.num_keys = 16;
        const auto sample = sample_reco_batch(*fwd.representation, candidates, 4,
                                              SamplerConfig::from_loss(loss, 0, SamplingStrategy::Active), rng.fork({9}));
        const auto plan = sample ? RecoPlan::from_sample(*sample) : RecoPlan{};
        const auto value = supervised_objective(params, x, y, &plan, loss);
        for (int k = 0; k < 20; ++k) {
            std::size_t idx = rng.below(params.parameter_count());
            while (oracle::crosses_relu_kink(params, x, idx, h)) {
                ++kinks;
                idx = rng.below(params.parameter_count());
            }
            const double fd = oracle::central_difference(
                [&] { return supervised_objective(params, x, y, &plan, loss).value; }, params.flat(idx), h);
            const double err = oracle::relative_error(value.grad.flat(idx), fd);
            worst_model = std::max(worst_model, err);
            ++model_checks;
            failures += err >= tol;
        }
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 120.0,
            fmt("reco_loss %zu coords on 100 instances, max rel err %.2e; model %zu params on 100 instances, max rel "
                "err %.2e (%zu draws redrawn for straddling a ReLU kink); %zu above 1e-4; %.1fs",
                loss_checks, worst_loss, model_checks, worst_model, kinks, failures, secs)};
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence(const Settings&) {
    double worst = 0.0;
    int instances = 0;
    for (std::uint64_t inst = 0; instances < 50; ++inst) {
        Rng rng = Rng(77).fork({inst});
        const int classes = 2 + static_cast<int>(rng.below(4));
        const std::size_t m = 4 + rng.below(5);
        const auto rep = fixture::random_representation(rng, 1, 8, 8, m);
        const auto labels = fixture::random_labels(rng, 64, classes);
        PixelCandidateSet candidates;
        for (std::size_t p = 0; p < 64; ++p) candidates.add(labels[p], PixelCandidate{p, rng.uniform()});
        const auto sample = exhaustive_reco_sample(rep, candidates, static_cast<std::size_t>(classes));
        if (!sample) continue;
        ++instances;
        LossConfig cfg;
        cfg.temperature = 0.5;
        const double loss = reco_loss(sample->bundles, sample->positives, sample->negatives, cfg).loss;

        // Independent construction straight from the pixel list.
        const auto rows = oracle::rows_of(rep.data.values);
        std::vector<oracle::ClassTerms> terms;
        for (int c = 0; c < classes; ++c) {
            oracle::ClassTerms t;
            oracle::Vec mean(m, 0.0);
            std::size_t n = 0;
            for (std::size_t p = 0; p < 64; ++p) {
                if (labels[p] == c) {
                    t.queries.push_back(rows[p]);
                    for (std::size_t d = 0; d < m; ++d) mean[d] += rows[p][d];
                    ++n;
                } else {
                    t.negatives.push_back(rows[p]);
                }
            }
            if (n == 0) continue;
            for (auto& v : mean) v /= static_cast<double>(n);
            t.positive = mean;
            terms.push_back(std::move(t));
        }
        worst = std::max(worst, std::abs(loss - oracle::reco_loss(terms, 0.5)));
    }
    return {worst <= 1e-10, fmt("50 exhaustive 8x8 instances, C in [2,5], max |loss - loop oracle| = %.2e", worst)};
}

// ---------------------------------------------------------------------------

Outcome distribution_correctness(const Settings&) {
    std::vector<std::string> problems;
    RelationGraph g;
    g.g = Matrix::Zero(4, 4);
    g.active_classes = {0, 1, 2, 3};
    const double vals[3] = {0.2, -0.4, 0.9};
    for (int k = 1; k <= 3; ++k) g.g(0, k) = g.g(k, 0) = vals[k - 1];
    const auto d = negative_class_distribution(g, 0);
    const double hand[3] = {0.28069668462449604, 0.15404960673493862, 0.5652537086405653};
    double hand_err = 0.0;
    for (int i = 0; i < 3; ++i) hand_err = std::max(hand_err, std::abs(d.probabilities[static_cast<std::size_t>(i)] - hand[i]));
    if (hand_err > 1e-12) problems.push_back("hand softmax mismatch");

    double sum_err = 0.0;
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const int c = 2 + static_cast<int>(rng.below(18));
        std::vector<ClassMean> means;
        for (int k = 0; k < c; ++k) means.push_back(ClassMean{k, fixture::random_matrix(rng, 8, 1).col(0), 1});
        const auto graph = relation_graph(means, static_cast<std::size_t>(c));
        for (int k = 0; k < c; ++k) {
            const auto dist = negative_class_distribution(graph, k);
            double s = 0.0;
            for (double p : dist.probabilities) s += p;
            sum_err = std::max(sum_err, std::abs(s - 1.0));
        }
    }
    if (sum_err > 1e-12) problems.push_back("distribution does not sum to 1");

    // 10^4 keys from the fixed distribution
    const auto rep = fixture::random_representation(rng, 1, 1, 40, 4);
    KeyPool pool;
    for (std::size_t p = 0; p < 40; ++p) pool.pixels_by_class[static_cast<int>(p % 4)].push_back(p);
    SamplerConfig cfg;
    cfg.num_keys = 10000;
    Rng draw(5);
    const auto keys = sample_negative_keys(pool, rep, 0, d, cfg, draw);
    std::string counts;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto n = static_cast<std::size_t>(std::count(keys.source_classes.begin(), keys.source_classes.end(), d.classes[i]));
        counts += fmt(" %d:%zu", d.classes[i], n);
        if (!oracle::within_3_sigma(n, 10000, d.probabilities[i])) problems.push_back("class count outside 3 sigma");
    }
    return {problems.empty(), fmt("hand softmax err %.1e, max |sum-1| %.1e over 1000 graphs, 1e4 draws ->%s (expect "
                                  "2807/1540/5653)%s",
                                  hand_err, sum_err, counts.c_str(), problems.empty() ? "" : (": " + problems.front()).c_str())};
}

// ---------------------------------------------------------------------------

Outcome budget_check(const Settings&) {
    constexpr std::size_t b = 2, h = 512, w = 512, classes = 19;
    Rng rng(19);
    Tensor4 raw(b, h, w, 4);
    for (Eigen::Index i = 0; i < raw.values.size(); ++i) raw.values.data()[i] = rng.normal();
    const auto rep = normalize_pixels(std::move(raw));
    PixelCandidateSet candidates;
    for (std::size_t p = 0; p < b * h * w; ++p) {
        // 19 vertical bands, one class each
        const auto c = static_cast<int>((p % w) * classes / w);
        candidates.add(c, PixelCandidate{p, rng.uniform()});
    }
    const SamplerConfig cfg;  // 256 queries + 512 keys
    const auto sample = sample_reco_batch(rep, candidates, classes, cfg, Rng(3));
    const double pixels = static_cast<double>(b * h * w);
    const std::size_t used = sample ? sample->sampled_vectors() : 0;
    const double frac = static_cast<double>(used) / pixels;
    return {sample && sample->bundles.size() == classes && frac <= 0.0279,
            fmt("%zu vectors of %.0f pixels = %.4f%% (limit 2.79%%)", used, pixels, 100.0 * frac)};
}

// ---------------------------------------------------------------------------

Outcome partition_verifiers(const Settings&) {
    std::vector<std::string> problems;
    std::size_t pdfl_ok = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        SynthSpec spec;
        spec.height = 32;
        spec.width = 32;
        spec.num_classes = 3 + static_cast<int>(s % 4);
        spec.train_count = 80;
        spec.val_count = 1;
        spec.seed = 1000 + s;
        const auto d = generate_synthetic(spec);
        const PdflSpec pspec{5, 2};
        Rng rng(s);
        try {
            const auto r = partition_pdfl(d.train.labels, spec.num_classes, pspec, rng);
            const auto why = oracle::check_pdfl(d.train.labels, spec.num_classes, pspec, r);
            if (why.empty())
                ++pdfl_ok;
            else
                problems.push_back(fmt("pdfl dataset %llu: %s", static_cast<unsigned long long>(s), why.c_str()));
        } catch (const Error& e) {
            problems.push_back(fmt("pdfl dataset %llu: %s", static_cast<unsigned long long>(s), e.what()));
        }
    }

    SynthSpec spec;
    spec.height = 64;
    spec.width = 64;
    spec.train_count = 25;
    spec.val_count = 1;
    spec.seed = 55;
    const auto d = generate_synthetic(spec);
    std::size_t plfd_ok = 0, plfd_total = 0;
    double max_over = 0.0;
    const std::vector<std::pair<std::string, LabelBudget>> budgets{{"one_pixel", LabelBudget::one_pixel()},
                                                                  {"1%", LabelBudget::of_fraction(0.01)},
                                                                  {"5%", LabelBudget::of_fraction(0.05)},
                                                                  {"25%", LabelBudget::of_fraction(0.25)}};
    for (const auto& [name, budget] : budgets) {
        for (std::size_t i = 0; i < d.train.size(); ++i) {
            Rng rng = Rng(9).fork({i});
            const auto r = partition_plfd(d.train.labels[i], budget, rng);
            ++plfd_total;
            const auto why = oracle::check_plfd(d.train.labels[i], budget, r);
            if (!why.empty()) {
                problems.push_back("plfd " + name + ": " + why);
                continue;
            }
            ++plfd_ok;
            if (budget.kind == LabelBudget::Kind::Fraction)
                for (const auto& a : r.classes)
                    max_over = std::max(max_over, static_cast<double>(a.revealed) / static_cast<double>(a.class_pixels) - budget.fraction);
        }
    }
    return {problems.empty(), fmt("pdfl %zu/20 datasets pass the checker; plfd %zu/%zu maps pass across {one_pixel, 1%%, "
                                  "5%%, 25%%}, max overshoot %.3f within one ring%s",
                                  pdfl_ok, plfd_ok, plfd_total, max_over,
                                  problems.empty() ? "" : ("; first problem: " + problems.front()).c_str())};
}

// ---------------------------------------------------------------------------

double param_gap(const ToyModelParams& a, const ToyModelParams& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.parameter_count(); ++i) s += (a.flat(i) - b.flat(i)) * (a.flat(i) - b.flat(i));
    return std::sqrt(s);
}

Outcome mean_teacher_contract(const Settings&) {
    SynthSpec spec;
    spec.height = 16;
    spec.width = 16;
    spec.train_count = 10;
    spec.val_count = 1;
    const auto data = generate_synthetic(spec);
    TrainConfig cfg;
    cfg.loss.num_queries = 32;
    cfg.loss.num_keys = 64;
    cfg.optim.total_iters = 200;
    cfg.seed = 4;
    Trainer trainer(ModelConfig{4, 16}, cfg);
    TrainingSet set{data.train.images, data.train.labels, {0, 1, 2}, {3, 4, 5, 6, 7, 8, 9}};
    double max_teacher_grad = 0.0;
    int steps = 0;
    run_training(trainer, set, 200, {[&](int, const StepReport& r) {
                                          max_teacher_grad = std::max(max_teacher_grad, r.teacher_grad_norm);
                                          ++steps;
                                      },
                                      {}});

    // Constant student: the gap shrinks by exactly λ per step.
    const ToyModelParams student = trainer.student();
    Rng rng(8);
    TeacherState teacher{ToyModelParams::initialize(ModelConfig{4, 16}, rng), 0.99};
    const double gap0 = param_gap(teacher.params, student);
    double worst_step = 0.0, worst_total = 0.0;
    double prev = gap0;
    for (int t = 1; t <= 1000; ++t) {
        ema_update(teacher, student);
        const double gap = param_gap(teacher.params, student);
        worst_step = std::max(worst_step, std::abs(gap - 0.99 * prev) / std::max(1.0, prev));
        worst_total = std::max(worst_total, std::abs(gap - std::pow(0.99, t) * gap0) / std::max(1.0, gap0));
        prev = gap;
    }
    return {max_teacher_grad == 0.0 && worst_step <= 1e-12 && worst_total <= 1e-12,
            fmt("teacher grad norm max %.1e over %d semi-supervised steps; EMA gap %.3g -> %.3g over 1000 steps, "
                "max per-step deviation %.1e, max deviation from 0.99^t %.1e (relative to max(1, gap))",
                max_teacher_grad, steps, gap0, prev, worst_step, worst_total)};
}

// ---------------------------------------------------------------------------

struct Variant {
    const char* name;
    TrainMode mode;
    Augmentation aug;
    bool reco;
};

// Five labelled ids drawn uniformly until every class appears among them.
std::vector<std::size_t> pick_labelled(const Dataset& train, int num_classes, Rng rng) {
    for (;;) {
        std::vector<std::size_t> ids(train.size());
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        for (std::size_t i = 0; i < 5; ++i) std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
        ids.resize(5);
        std::set<int> seen;
        for (auto i : ids)
            for (int c : present_classes(train.labels[i])) seen.insert(c);
        if (static_cast<int>(seen.size()) == num_classes) {
            std::sort(ids.begin(), ids.end());
            return ids;
        }
    }
}

Outcome end_to_end(const Settings& s) {
    const Variant variants[3] = {{"supervised", TrainMode::Supervised, Augmentation::None, false},
                                 {"classmix", TrainMode::SemiSupervised, Augmentation::ClassMix, false},
                                 {"reco+classmix", TrainMode::SemiSupervised, Augmentation::ClassMix, true}};
    int reco_wins = 0, mix_wins = 0;
    double slowest = 0.0;
    Json log = Json::array();
    for (int seed = 0; seed < s.seeds; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        SynthSpec spec;
        spec.height = 64;
        spec.width = 64;
        spec.num_classes = 4;
        spec.train_count = 100;
        spec.val_count = 50;
        spec.seed = static_cast<std::uint64_t>(seed);
        const auto data = generate_synthetic(spec, worker_count());
        TrainingSet set{data.train.images, data.train.labels, pick_labelled(data.train, 4, Rng(seed).fork({0x6c61})), {}};
        for (std::size_t i = 0; i < data.train.size(); ++i)
            if (std::find(set.labelled.begin(), set.labelled.end(), i) == set.labelled.end()) set.unlabelled.push_back(i);

        double miou[3];
        for (int v = 0; v < 3; ++v) {
            TrainConfig cfg;
            cfg.mode = variants[v].mode;
            cfg.augmentation = variants[v].aug;
            cfg.reco = variants[v].reco;
            cfg.optim.total_iters = s.iters;
            cfg.optim.base_lr = s.base_lr;
            cfg.seed = static_cast<std::uint64_t>(seed);
            Trainer trainer(ModelConfig{4, 32}, cfg);
            run_training(trainer, set, s.iters, {});
            const auto& params = cfg.mode == TrainMode::SemiSupervised ? trainer.teacher().params : trainer.student();
            miou[v] = mean_iou(evaluate_model(params, data.val, worker_count())).mean;
        }
        const double secs = seconds_since(t0);
        slowest = std::max(slowest, secs);
        reco_wins += miou[2] >= miou[1];
        mix_wins += miou[1] >= miou[0];
        log.push_back({{"seed", seed}, {"labelled", set.labelled}, {"supervised", miou[0]}, {"classmix", miou[1]},
                       {"reco_classmix", miou[2]}, {"seconds", secs}});
        std::cout << fmt("    seed %d: supervised %.4f  classmix %.4f  reco+classmix %.4f  (%.0fs)\n", seed, miou[0],
                         miou[1], miou[2], secs)
                  << std::flush;
    }
    write_text(s.work / "end_to_end.json", log.dump(2) + "\n");
    const int need = s.seeds - 1;
    return {reco_wins >= need && mix_wins >= need && slowest < 900.0,
            fmt("reco+classmix >= classmix in %d/%d seeds, classmix >= supervised in %d/%d seeds (need %d); slowest "
                "seed %.0fs of 900s; %d iterations",
                reco_wins, s.seeds, mix_wins, s.seeds, need, slowest, s.iters)};
}

// ---------------------------------------------------------------------------

Outcome metric_oracle(const Settings&) {
    Rng rng(88);
    int exact = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int c = 2 + static_cast<int>(rng.below(18));
        const std::size_t n = 50 + rng.below(2000);
        auto truth = fixture::random_labels(rng, n, c);
        auto pred = fixture::random_labels(rng, n, c);
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.uniform() < 0.1) truth[i] = kIgnoreLabel;
            if (rng.uniform() < 0.5 && truth[i] != kIgnoreLabel) pred[i] = truth[i];
        }
        ConfusionMatrix cm(c);
        cm.add(truth, pred);
        const auto r = mean_iou(cm);
        const auto o = oracle::brute_iou(truth, pred, c);
        bool same = r.mean == o.mean;
        for (int k = 0; k < c; ++k) {
            const double ok = o.per_class[static_cast<std::size_t>(k)];
            const auto& mine = r.per_class[static_cast<std::size_t>(k)];
            same = same && (std::isnan(ok) ? !mine.has_value() : (mine && *mine == ok));
        }
        exact += same;
    }

    int trees = 0, trees_ok = 0;
    double worst_h = 0.0;
    for (int c = 2; c <= 8; ++c)
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<ClassMean> means;
            std::vector<int> ids;
            oracle::Rows rows;
            const auto dim = 1 + static_cast<Eigen::Index>(rng.below(32));
            for (int k = 0; k < c; ++k) {
                means.push_back(ClassMean{k, fixture::random_matrix(rng, dim, 1).col(0), 1});
                ids.push_back(k);
                rows.push_back(oracle::vec_of(means.back().vector));
            }
            const auto d = dendrogram(means);
            const auto o = oracle::average_linkage(ids, rows);
            bool ok = d.merges.size() == o.size();
            for (std::size_t k = 0; ok && k < o.size(); ++k) {
                ok = d.merges[k].members == o[k].members;
                worst_h = std::max(worst_h, std::abs(d.merges[k].height - o[k].height));
            }
            ok = ok && worst_h <= 1e-12;
            ++trees;
            trees_ok += ok;
        }
    return {exact == 100 && trees_ok == trees,
            fmt("mIoU exact on %d/100 pairs; dendrogram matches on %d/%d instances with C in [2,8], max height diff %.1e",
                exact, trees_ok, trees, worst_h)};
}

// ---------------------------------------------------------------------------

Outcome determinism(const Settings& s) {
    const fs::path root = s.work / "determinism";
    fs::remove_all(root);
    Json cfg = Json::parse(R"({
      "seed": 21,
      "data": {"height": 32, "width": 32, "train_count": 30, "val_count": 5},
      "partition": {"mode": "partial_dataset_full_labels", "min_images_per_class": 2},
      "model": {"embed_dim": 16},
      "loss": {"num_queries": 64, "num_keys": 128},
      "optim": {"total_iters": 60, "base_lr": 0.01},
      "train": {"mode": "semi_supervised", "augmentation": "classmix", "checkpoint_every": 20}
    })");
    cfg["out_dir"] = (root / "run").string();
    write_text(root / "config.json", cfg.dump(2));
    cli::Options opts;
    opts.config = root / "config.json";
    opts.timestamp = false;
    std::ostringstream out, err;
    for (const char* cmd : {"generate", "partition", "train"})
        if (cli::run(cmd, opts, out, err) != cli::kExitOk) return {false, "pipeline failed: " + err.str()};

    auto snapshot = [&] {
        std::map<std::string, std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(root / "run" / "train"))
            if (e.is_regular_file()) files[fs::relative(e.path(), root / "run").string()] = read_text(e.path());
        return files;
    };
    const auto first = snapshot();
    fs::remove_all(root / "run" / "train");
    if (cli::run("train", opts, out, err) != cli::kExitOk) return {false, "replay failed: " + err.str()};
    const auto second = snapshot();
    std::size_t bytes = 0, differing = 0;
    for (const auto& [name, text] : first) {
        bytes += text.size();
        const auto it = second.find(name);
        differing += it == second.end() || it->second != text;
    }
    differing += second.size() > first.size() ? second.size() - first.size() : 0;
    return {differing == 0 && first.count("train/metrics.csv") == 1,
            fmt("replayed cmd_train: %zu files (%zu bytes, metrics + %zu checkpoints), %zu differ", first.size(), bytes,
                first.size() - 1, differing)};
}

}  // namespace

int main(int argc, char** argv) {
    Settings s;
    std::vector<int> only;
    CLI::App app{"acceptance checks"};
    app.add_option("--work", s.work, "scratch directory");
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--seeds", s.seeds, "seeds for the end-to-end check");
    app.add_option("--iters", s.iters, "iterations for the end-to-end check");
    app.add_option("--lr", s.base_lr, "base learning rate for the end-to-end check");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(s.work);

    const std::vector<std::pair<const char*, std::function<Outcome(const Settings&)>>> criteria{
        {"gradient fidelity", gradient_fidelity},       {"oracle equivalence", oracle_equivalence},
        {"distribution correctness", distribution_correctness}, {"sampling budget", budget_check},
        {"partition verifiers", partition_verifiers},   {"mean-teacher contract", mean_teacher_contract},
        {"end-to-end direction", end_to_end},           {"metric oracle", metric_oracle},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Outcome o;
        try {
            o = criteria[i].second(s);
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail << '\n'
                  << std::flush;
    }
    return failed == 0 ? 0 : 1;
}

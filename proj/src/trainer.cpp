#include "reco/trainer.hpp"

#include <cmath>
#include <string>

namespace reco {

std::string_view to_string(TrainMode m) { return m == TrainMode::Supervised ? "supervised" : "semi_supervised"; }

std::string_view to_string(Augmentation a) {
    switch (a) {
        case Augmentation::None: return "none";
        case Augmentation::CutOut: return "cutout";
        case Augmentation::CutMix: return "cutmix";
        case Augmentation::ClassMix: return "classmix";
    }
    return "none";
}

TrainMode parse_train_mode(std::string_view s) {
    if (s == "supervised") return TrainMode::Supervised;
    if (s == "semi_supervised") return TrainMode::SemiSupervised;
    fail(ErrorKind::Config, "unknown training mode '" + std::string(s) + "'");
}

Augmentation parse_augmentation(std::string_view s) {
    for (auto a : {Augmentation::None, Augmentation::CutOut, Augmentation::CutMix, Augmentation::ClassMix})
        if (to_string(a) == s) return a;
    fail(ErrorKind::Config, "unknown augmentation '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    loss.validate();
    optim.validate();
    require(ema_decay >= 0.0 && ema_decay <= 1.0, ErrorKind::Config, "ema_decay must be in [0, 1]");
    require(labelled_batch >= 1, ErrorKind::Config, "labelled_batch must be at least 1");
    require(mode == TrainMode::Supervised || unlabelled_batch >= 1, ErrorKind::Config,
            "semi_supervised mode needs unlabelled_batch >= 1");
    require(!eta_override || (*eta_override >= 0.0 && *eta_override <= 1.0), ErrorKind::Config,
            "eta_override must be in [0, 1]");
}

double compute_eta(std::span<const double> confidence, double strong_threshold) {
    if (confidence.empty()) return 0.0;
    std::size_t above = 0;
    for (double c : confidence)
        if (c > strong_threshold) ++above;
    return static_cast<double>(above) / static_cast<double>(confidence.size());
}

CrossEntropy pixel_cross_entropy(const Matrix& logits, std::span<const Label> labels, bool allow_empty) {
    require(static_cast<std::size_t>(logits.rows()) == labels.size(), ErrorKind::DimensionMismatch,
            "logit rows differ from label count");
    CrossEntropy ce;
    ce.dlogits = Matrix::Zero(logits.rows(), logits.cols());
    for (auto l : labels)
        if (l != kIgnoreLabel) ++ce.counted;
    if (ce.counted == 0) {
        if (allow_empty) return ce;
        fail(ErrorKind::AllIgnored, "every pixel carries the ignore label");
    }
    const double inv = 1.0 / static_cast<double>(ce.counted);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const Label y = labels[static_cast<std::size_t>(i)];
        if (y == kIgnoreLabel) continue;
        require(y < logits.cols(), ErrorKind::InvalidArgument, "label " + std::to_string(y) + " out of range");
        const double peak = logits.row(i).maxCoeff();
        const RowVector e = (logits.row(i).array() - peak).exp().matrix();
        const double z = e.sum();
        ce.loss += (std::log(z) + peak - logits(i, y)) * inv;
        ce.dlogits.row(i) = e * (inv / z);
        ce.dlogits(i, y) -= inv;
    }
    return ce;
}

RecoPlan RecoPlan::from_sample(const RecoSample& sample) {
    RecoPlan plan;
    for (const auto& b : sample.bundles) {
        plan.query_pixels[b.class_id] = b.pixel_ids;
        plan.query_confidences[b.class_id] = b.confidences;
    }
    plan.positives = sample.positives;
    plan.negatives = sample.negatives;
    return plan;
}

RecoTerm evaluate_reco(const DenseRepresentation& rep, const RecoPlan& plan, const LossConfig& cfg) {
    RecoTerm term;
    term.drep = Matrix::Zero(static_cast<Eigen::Index>(rep.data.pixels()), static_cast<Eigen::Index>(rep.dim()));
    if (plan.empty()) return term;

    std::vector<QueryBundle> bundles;
    for (const auto& [c, pixels] : plan.query_pixels) {
        QueryBundle b;
        b.class_id = c;
        b.pixel_ids = pixels;
        b.confidences = plan.query_confidences.at(c);
        b.queries.resize(static_cast<Eigen::Index>(pixels.size()), static_cast<Eigen::Index>(rep.dim()));
        for (std::size_t q = 0; q < pixels.size(); ++q)
            b.queries.row(static_cast<Eigen::Index>(q)) = rep.data.values.row(static_cast<Eigen::Index>(pixels[q]));
        bundles.push_back(std::move(b));
    }
    auto res = reco_loss(bundles, plan.positives, plan.negatives, cfg);
    term.loss = res.loss;
    for (std::size_t k = 0; k < bundles.size(); ++k)
        for (std::size_t q = 0; q < bundles[k].pixel_ids.size(); ++q)
            term.drep.row(static_cast<Eigen::Index>(bundles[k].pixel_ids[q])) +=
                res.query_gradients[k].row(static_cast<Eigen::Index>(q));
    return term;
}

void add_labelled_candidates(PixelCandidateSet& set, std::span<const Label> labels, const Matrix& probabilities,
                             std::size_t pixel_offset) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Label y = labels[i];
        if (y == kIgnoreLabel) continue;
        set.add(y, PixelCandidate{i + pixel_offset, probabilities(static_cast<Eigen::Index>(i), y), PixelSource::Labelled});
    }
}

namespace {

struct Objective {
    double ce = 0.0;
    double reco = 0.0;
    ToyModelParams grad;
};

Objective objective_from_forward(const ToyModelParams& params, const ForwardResult& fwd, std::span<const Label> labels,
                                 const RecoPlan* plan, const LossConfig& loss) {
    auto ce = pixel_cross_entropy(fwd.logits.values, labels);
    Objective out;
    out.ce = ce.loss;
    if (plan != nullptr && !plan->empty()) {
        auto term = evaluate_reco(*fwd.representation, *plan, loss);
        out.reco = term.loss;
        out.grad = backward(params, fwd.cache, ce.dlogits, &term.drep);
    } else {
        out.grad = backward(params, fwd.cache, ce.dlogits, nullptr);
    }
    return out;
}

DenseRepresentation concat_rows(const DenseRepresentation& a, const DenseRepresentation& b) {
    require(a.data.height == b.data.height && a.data.width == b.data.width && a.dim() == b.dim(),
            ErrorKind::ShapeMismatch, "representations differ in shape");
    DenseRepresentation out;
    out.data = Tensor4(a.data.batch + b.data.batch, a.data.height, a.data.width, 0);
    out.data.values.resize(a.data.values.rows() + b.data.values.rows(), a.data.values.cols());
    out.data.values.topRows(a.data.values.rows()) = a.data.values;
    out.data.values.bottomRows(b.data.values.rows()) = b.data.values;
    out.normalized = a.normalized && b.normalized;
    return out;
}

void accumulate(ToyModelParams& into, const ToyModelParams& add) {
    std::vector<const Matrix*> src;
    add.for_each([&](std::string_view, const Matrix& m) { src.push_back(&m); });
    std::size_t i = 0;
    into.for_each([&](std::string_view, Matrix& m) { m += *src[i++]; });
}

double difference_norm(const ToyModelParams& a, const ToyModelParams& b) {
    std::vector<const Matrix*> bm;
    b.for_each([&](std::string_view, const Matrix& m) { bm.push_back(&m); });
    double s = 0.0;
    std::size_t i = 0;
    a.for_each([&](std::string_view, const Matrix& m) { s += (m - *bm[i++]).squaredNorm(); });
    return std::sqrt(s);
}

}  // namespace

ObjectiveValue supervised_objective(const ToyModelParams& params, const Tensor4& images, std::span<const Label> labels,
                                    const RecoPlan* plan, const LossConfig& loss) {
    const auto fwd = forward(params, images, ForwardMode::Train);
    auto obj = objective_from_forward(params, fwd, labels, plan, loss);
    return ObjectiveValue{obj.ce + obj.reco, std::move(obj.grad)};
}

Trainer::Trainer(const ModelConfig& model, const TrainConfig& cfg) : model_(model), cfg_(cfg) {
    model_.validate();
    cfg_.validate();
    Rng init = Rng(cfg_.seed).fork({stream_tag::kInit});
    student_ = ToyModelParams::initialize(model_, init);
    teacher_ = TeacherState{student_, cfg_.ema_decay};
    sgd_ = SgdState::for_params(student_);
}

void Trainer::restore(ToyModelParams student, ToyModelParams teacher, ToyModelParams velocity, int iteration) {
    require(student.same_shape(student_) && teacher.same_shape(student_) && velocity.same_shape(student_),
            ErrorKind::ShapeMismatch, "restored state does not match the model configuration");
    student_ = std::move(student);
    teacher_.params = std::move(teacher);
    sgd_.velocity = std::move(velocity);
    iteration_ = iteration;
}

Rng Trainer::stream(std::uint64_t purpose) const {
    return Rng(cfg_.seed).fork({purpose, static_cast<std::uint64_t>(iteration_)});
}

RecoPlan Trainer::plan_reco(const DenseRepresentation& rep, const PixelCandidateSet& candidates) const {
    const auto sampler = SamplerConfig::from_loss(cfg_.loss, cfg_.seed, cfg_.strategy);
    const auto sample = sample_reco_batch(rep, candidates, static_cast<std::size_t>(model_.num_classes), sampler,
                                          stream(stream_tag::kReco));
    return sample ? RecoPlan::from_sample(*sample) : RecoPlan{};
}

StepReport Trainer::supervised_step(const Batch& labelled) {
    const Tensor4 x = stack_images(labelled.images);
    const auto y = stack_labels(labelled.labels);
    const auto fwd = forward(student_, x, ForwardMode::Train);

    StepReport report;
    RecoPlan plan;
    if (cfg_.reco) {
        PixelCandidateSet candidates;
        add_labelled_candidates(candidates, y, softmax_rows(fwd.logits.values), 0);
        report.reco_candidates = candidates.total();
        plan = plan_reco(*fwd.representation, candidates);
    }
    auto obj = objective_from_forward(student_, fwd, y, &plan, cfg_.loss);
    report.losses.supervised = obj.ce;
    report.losses.reco = obj.reco;
    report.losses.total = obj.ce + obj.reco;
    report.lr = poly_learning_rate(iteration_, cfg_.optim);

    const ToyModelParams teacher_before = teacher_.params;
    sgd_step(student_, obj.grad, sgd_, iteration_, cfg_.optim);
    report.teacher_grad_norm = difference_norm(teacher_.params, teacher_before);
    ++iteration_;
    return report;
}

StepReport Trainer::semi_supervised_step(const Batch& labelled, const Batch& unlabelled) {
    require(!unlabelled.images.empty(), ErrorKind::InvalidArgument, "semi-supervised step needs unlabelled images");
    StepReport report;

    // (1) teacher pseudo-labels on the raw unlabelled view
    const auto teacher_out = forward(teacher_.params, stack_images(unlabelled.images), ForwardMode::Eval);
    const auto pseudo = confidence_and_pseudo(teacher_out.logits);
    const double eta = cfg_.eta_override ? *cfg_.eta_override : compute_eta(pseudo.confidence, cfg_.loss.strong_threshold);

    // (2) mix (image, pseudo label, confidence) triples within the batch
    const std::size_t n = unlabelled.images.size();
    const std::size_t h = unlabelled.images.front().height;
    const std::size_t w = unlabelled.images.front().width;
    const std::size_t per_image = h * w;
    std::vector<Image> u_images(n);
    std::vector<LabelMap> u_labels(n);
    std::vector<double> u_conf(n * per_image);
    Rng aug = stream(stream_tag::kAugment);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        LabelMap pl_i(h, w), pl_j(h, w);
        std::copy_n(pseudo.labels.begin() + static_cast<std::ptrdiff_t>(i * per_image), per_image, pl_i.values.begin());
        std::copy_n(pseudo.labels.begin() + static_cast<std::ptrdiff_t>(j * per_image), per_image, pl_j.values.begin());
        const double* conf_i = pseudo.confidence.data() + i * per_image;
        const double* conf_j = pseudo.confidence.data() + j * per_image;
        double* conf_out = u_conf.data() + i * per_image;

        PixelMask mask;
        ImageLabel mixed;
        switch (cfg_.augmentation) {
            case Augmentation::None:
                mixed = {unlabelled.images[i], pl_i};
                std::copy_n(conf_i, per_image, conf_out);
                break;
            case Augmentation::CutOut:
                mask = box_mask(h, w, random_patch(h, w, aug));
                mixed = apply_cutout(mask, unlabelled.images[i], pl_i);
                for (std::size_t p = 0; p < per_image; ++p) conf_out[p] = mask[p] ? 0.0 : conf_i[p];
                break;
            case Augmentation::CutMix:
            case Augmentation::ClassMix:
                if (cfg_.augmentation == Augmentation::CutMix)
                    mask = box_mask(h, w, random_patch(h, w, aug));
                else
                    mask = class_mask(pl_i, choose_classmix_classes(pl_i, aug));
                mixed = apply_mix(mask, unlabelled.images[i], pl_i, unlabelled.images[j], pl_j);
                for (std::size_t p = 0; p < per_image; ++p) conf_out[p] = mask[p] ? conf_i[p] : conf_j[p];
                break;
        }
        u_images[i] = std::move(mixed.image);
        u_labels[i] = std::move(mixed.label);
    }

    // (3) student on both streams
    const Tensor4 xl = stack_images(labelled.images);
    const auto yl = stack_labels(labelled.labels);
    const auto yu = stack_labels(u_labels);
    const auto fl = forward(student_, xl, ForwardMode::Train);
    const auto fu = forward(student_, stack_images(u_images), ForwardMode::Train);

    // (4) cross-entropies
    const auto ce_l = pixel_cross_entropy(fl.logits.values, yl);
    const auto ce_u = pixel_cross_entropy(fu.logits.values, yu, true);

    // (5) ReCo over labelled ∪ gated pseudo-labelled pixels
    const auto nl = static_cast<Eigen::Index>(xl.pixels());
    const auto nu = static_cast<Eigen::Index>(yu.size());
    const auto m = static_cast<Eigen::Index>(model_.embed_dim);
    Matrix drep_l = Matrix::Zero(nl, m);
    Matrix drep_u = Matrix::Zero(nu, m);
    if (cfg_.reco) {
        PixelCandidateSet candidates;
        add_labelled_candidates(candidates, yl, softmax_rows(fl.logits.values), 0);
        const Matrix prob_u = softmax_rows(fu.logits.values);
        const auto gated = gate_pseudo_pixels(u_conf, yu, cfg_.loss.weak_threshold, static_cast<std::size_t>(nl));
        for (const auto& g : gated)
            candidates.add(g.label, PixelCandidate{g.pixel, prob_u(static_cast<Eigen::Index>(g.pixel) - nl, g.label),
                                                   PixelSource::Pseudo});
        report.reco_candidates = candidates.total();
        report.pseudo_candidates = gated.size();
        const auto combined = concat_rows(*fl.representation, *fu.representation);
        const auto term = evaluate_reco(combined, plan_reco(combined, candidates), cfg_.loss);
        report.losses.reco = term.loss;
        drep_l = term.drep.topRows(nl);
        drep_u = term.drep.bottomRows(nu);
    }

    // (6) total
    report.losses.supervised = ce_l.loss;
    report.losses.unsupervised = ce_u.loss;
    report.losses.eta = eta;
    report.losses.total = ce_l.loss + eta * ce_u.loss + report.losses.reco;
    report.lr = poly_learning_rate(iteration_, cfg_.optim);

    // (7) student update, then the teacher follows
    ToyModelParams grad = backward(student_, fl.cache, ce_l.dlogits, &drep_l);
    const Matrix du_logits = eta * ce_u.dlogits;
    accumulate(grad, backward(student_, fu.cache, du_logits, &drep_u));

    const ToyModelParams teacher_before = teacher_.params;
    sgd_step(student_, grad, sgd_, iteration_, cfg_.optim);
    report.teacher_grad_norm = difference_norm(teacher_.params, teacher_before);
    ema_update(teacher_, student_);
    ++iteration_;
    return report;
}

Batch draw_batch(const TrainingSet& set, std::span<const std::size_t> ids, int count, bool flip, Rng rng) {
    require(!ids.empty(), ErrorKind::Data, "no images available for the batch");
    std::vector<std::size_t> pool(ids.begin(), ids.end());
    Batch batch;
    for (int k = 0; k < count; ++k) {
        std::size_t id;
        const auto i = static_cast<std::size_t>(k);
        if (i < pool.size()) {
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
            id = pool[i];
        } else {
            id = pool[rng.below(pool.size())];
        }
        const bool mirror = flip && (rng() & 1U);
        batch.images.push_back(mirror ? flip_horizontal(set.images[id]) : set.images[id]);
        batch.labels.push_back(mirror ? flip_horizontal(set.labels[id]) : set.labels[id]);
    }
    return batch;
}

void run_training(Trainer& trainer, const TrainingSet& set, int until, const RunHooks& hooks) {
    const auto& cfg = trainer.config();
    require(until <= cfg.optim.total_iters, ErrorKind::Config, "cannot train past total_iters");
    while (trainer.iteration() < until) {
        const int it = trainer.iteration();
        const Rng data = trainer.stream(stream_tag::kData);
        const Batch labelled = draw_batch(set, set.labelled, cfg.labelled_batch, cfg.flip, data.fork({0}));
        StepReport report;
        if (cfg.mode == TrainMode::Supervised) {
            report = trainer.supervised_step(labelled);
        } else {
            const Batch unlabelled = draw_batch(set, set.unlabelled, cfg.unlabelled_batch, cfg.flip, data.fork({1}));
            report = trainer.semi_supervised_step(labelled, unlabelled);
        }
        if (hooks.on_step) hooks.on_step(it, report);
        if (hooks.on_iteration_end) hooks.on_iteration_end(it + 1);
    }
}

}  // namespace reco

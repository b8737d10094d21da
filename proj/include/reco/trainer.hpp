#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reco/core.hpp"
#include "reco/data.hpp"
#include "reco/model.hpp"
#include "reco/sampling.hpp"

namespace reco {

enum class TrainMode { Supervised, SemiSupervised };
enum class Augmentation { None, CutOut, CutMix, ClassMix };

std::string_view to_string(TrainMode m);
std::string_view to_string(Augmentation a);
TrainMode parse_train_mode(std::string_view s);
Augmentation parse_augmentation(std::string_view s);

struct TrainConfig {
    TrainMode mode = TrainMode::SemiSupervised;
    Augmentation augmentation = Augmentation::ClassMix;
    bool reco = true;
    LossConfig loss;
    SamplingStrategy strategy = SamplingStrategy::Active;
    OptimConfig optim;
    double ema_decay = 0.99;
    int labelled_batch = 2;
    int unlabelled_batch = 2;
    bool flip = true;
    std::uint64_t seed = 0;
    /// Replaces the computed η when set (term-isolation experiments).
    std::optional<double> eta_override;

    void validate() const;
};

struct LossBreakdown {
    double supervised = 0.0;
    double unsupervised = 0.0;
    double reco = 0.0;
    double eta = 0.0;
    double total = 0.0;
};

struct StepReport {
    LossBreakdown losses;
    double lr = 0.0;
    /// Norm of the gradient accumulated for the teacher; zero by construction.
    double teacher_grad_norm = 0.0;
    std::size_t reco_candidates = 0;
    std::size_t pseudo_candidates = 0;
};

struct Batch {
    std::vector<Image> images;
    std::vector<LabelMap> labels;
};

/// Fraction of pixels with confidence strictly above δ_s.
double compute_eta(std::span<const double> confidence, double strong_threshold);

struct CrossEntropy {
    double loss = 0.0;
    Matrix dlogits;
    std::size_t counted = 0;
};

/// Mean over non-ignored pixels. Throws AllIgnored if every label is ignore
/// unless `allow_empty`, in which case the loss and gradient are zero.
CrossEntropy pixel_cross_entropy(const Matrix& logits, std::span<const Label> labels, bool allow_empty = false);

/// Frozen outcome of one ReCo sampling pass: which pixels are queries, and
/// the constant positive/negative keys they are contrasted with.
struct RecoPlan {
    std::map<int, std::vector<std::size_t>> query_pixels;
    std::map<int, std::vector<double>> query_confidences;
    std::map<int, Vector> positives;
    std::map<int, Matrix> negatives;

    static RecoPlan from_sample(const RecoSample& sample);
    bool empty() const { return query_pixels.empty(); }
};

struct RecoTerm {
    double loss = 0.0;
    /// Gradient w.r.t. every representation pixel (zero outside queries).
    Matrix drep;
};

/// Evaluates the loss of a frozen plan on (possibly perturbed) representations.
RecoTerm evaluate_reco(const DenseRepresentation& rep, const RecoPlan& plan, const LossConfig& cfg);

/// Candidates from labelled pixels: every non-ignored pixel, with the
/// predicted probability of its label as confidence.
void add_labelled_candidates(PixelCandidateSet& set, std::span<const Label> labels, const Matrix& probabilities,
                             std::size_t pixel_offset);

struct ObjectiveValue {
    double value = 0.0;
    ToyModelParams grad;
};

/// Pixel-mean cross-entropy plus the ReCo loss of `plan` (if any); this is
/// exactly what a supervised step differentiates.
ObjectiveValue supervised_objective(const ToyModelParams& params, const Tensor4& images, std::span<const Label> labels,
                                    const RecoPlan* plan, const LossConfig& loss);

/// Owns student, teacher, optimiser state and the iteration counter.
class Trainer {
public:
    Trainer(const ModelConfig& model, const TrainConfig& cfg);

    StepReport supervised_step(const Batch& labelled);
    StepReport semi_supervised_step(const Batch& labelled, const Batch& unlabelled);

    const ToyModelParams& student() const { return student_; }
    const TeacherState& teacher() const { return teacher_; }
    const SgdState& optimiser() const { return sgd_; }
    const TrainConfig& config() const { return cfg_; }
    int iteration() const { return iteration_; }

    /// Restores a saved state (checkpoint resume).
    void restore(ToyModelParams student, ToyModelParams teacher, ToyModelParams velocity, int iteration);

    /// Stream for a purpose at the current iteration.
    Rng stream(std::uint64_t purpose) const;

private:
    RecoPlan plan_reco(const DenseRepresentation& rep, const PixelCandidateSet& candidates) const;

    ModelConfig model_;
    TrainConfig cfg_;
    ToyModelParams student_;
    TeacherState teacher_;
    SgdState sgd_;
    int iteration_ = 0;
};

namespace stream_tag {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kAugment = 3;
inline constexpr std::uint64_t kReco = 4;
}  // namespace stream_tag

/// Images selected for training. For partial-label runs `labels` holds the
/// partial maps and every image is also listed as unlabelled.
struct TrainingSet {
    std::span<const Image> images;
    std::span<const LabelMap> labels;
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> unlabelled;
};

/// Draws `count` distinct ids (with replacement once exhausted) and applies
/// the random horizontal flip when enabled.
Batch draw_batch(const TrainingSet& set, std::span<const std::size_t> ids, int count, bool flip, Rng rng);

struct RunHooks {
    std::function<void(int iter, const StepReport&)> on_step;
    /// Called after the step that completes iteration `iter` (1-based count).
    std::function<void(int completed)> on_iteration_end;
};

/// Runs iterations [trainer.iteration(), until) of the configured mode.
void run_training(Trainer& trainer, const TrainingSet& set, int until, const RunHooks& hooks);

}  // namespace reco

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reco/core.hpp"
#include "reco/rng.hpp"

namespace reco {

inline constexpr std::size_t kInputChannels = 3;
inline constexpr std::size_t kHiddenChannels = 16;
inline constexpr std::size_t kFeatureChannels = 32;
inline constexpr std::size_t kKernel = 3;

struct ModelConfig {
    int num_classes = 4;
    int embed_dim = 32;

    void validate() const;
};

/// Encoder: two 3×3 convolutions (3→16→32, stride 1, padding 1) with ReLU.
/// Heads: 1×1 classifier 32→C and 1×1 representation 32→m.
///
/// Convolution weights are stored im2col-style: row (ky·3 + kx)·Cin + cin,
/// column = output channel. Biases are 1×Cout.
struct ToyModelParams {
    Matrix conv1_w, conv1_b;
    Matrix conv2_w, conv2_b;
    Matrix cls_w, cls_b;
    Matrix rep_w, rep_b;

    static ToyModelParams zeros(const ModelConfig& cfg);
    /// Weights uniform in ±1/√fan_in, biases zero.
    static ToyModelParams initialize(const ModelConfig& cfg, Rng& rng);

    ModelConfig config() const;
    std::size_t parameter_count() const;

    template <class F>
    void for_each(F&& f) {
        f(std::string_view("conv1_w"), conv1_w); f(std::string_view("conv1_b"), conv1_b);
        f(std::string_view("conv2_w"), conv2_w); f(std::string_view("conv2_b"), conv2_b);
        f(std::string_view("cls_w"), cls_w);     f(std::string_view("cls_b"), cls_b);
        f(std::string_view("rep_w"), rep_w);     f(std::string_view("rep_b"), rep_b);
    }
    template <class F>
    void for_each(F&& f) const {
        const_cast<ToyModelParams*>(this)->for_each([&](std::string_view n, Matrix& m) { f(n, static_cast<const Matrix&>(m)); });
    }

    /// Flat view over all parameters in for_each order.
    double& flat(std::size_t index);
    double flat(std::size_t index) const { return const_cast<ToyModelParams*>(this)->flat(index); }

    bool same_shape(const ToyModelParams& o) const;
    double squared_norm() const;
    bool all_finite() const;
};

enum class ForwardMode { Train, Eval };

struct ForwardCache {
    std::size_t batch = 0, height = 0, width = 0;
    Matrix cols1, pre1, act1;
    Matrix cols2, pre2;
    Matrix raw_rep;
    Vector rep_norms;
};

struct ForwardResult {
    Tensor4 logits;
    /// Encoder output Z (post-ReLU).
    Tensor4 features;
    /// Present in train mode only.
    std::optional<DenseRepresentation> representation;
    ForwardCache cache;
};

/// Throws ShapeMismatch unless the input has 3 channels and finite values.
ForwardResult forward(const ToyModelParams& params, const Tensor4& images, ForwardMode mode = ForwardMode::Train);

/// Parameter gradients given upstream gradients w.r.t. the logits and
/// (optionally) the normalised representation. Both are pixels×channels.
ToyModelParams backward(const ToyModelParams& params, const ForwardCache& cache, const Matrix& dlogits,
                        const Matrix* drep);

struct PseudoLabels {
    std::vector<Label> labels;
    std::vector<double> confidence;
};

/// Per-pixel softmax; label is the argmax (lowest index on ties), confidence
/// the maximum probability.
PseudoLabels confidence_and_pseudo(const Tensor4& logits);

/// Row-wise softmax of pixels×C logits.
Matrix softmax_rows(const Matrix& logits);

struct OptimConfig {
    double base_lr = 2.5e-3;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double power = 0.9;
    int total_iters = 40000;

    void validate() const;
};

/// base_lr · (1 − iter/total_iters)^power.
double poly_learning_rate(int iter, const OptimConfig& cfg);

struct SgdState {
    ToyModelParams velocity;

    static SgdState for_params(const ToyModelParams& p) { return SgdState{ToyModelParams::zeros(p.config())}; }
};

/// Classic momentum SGD: v ← μv + (g + wd·θ); θ ← θ − lr(iter)·v.
void sgd_step(ToyModelParams& params, const ToyModelParams& grads, SgdState& state, int iter, const OptimConfig& cfg);

struct TeacherState {
    ToyModelParams params;
    double decay = 0.99;
};

/// θ′ ← λθ′ + (1 − λ)θ. Throws ShapeMismatch if the parameter shapes differ.
void ema_update(TeacherState& teacher, const ToyModelParams& student);

}  // namespace reco

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "reco/rng.hpp"
#include "reco/tensor.hpp"

namespace reco {

// ---------------------------------------------------------------------------
// Synthetic shapes dataset

enum class ShapeKind : std::uint8_t { Rectangle, Circle, Triangle, Diamond, Cross, Ring, Ellipse, Hexagon };
inline constexpr int kShapeKinds = 8;

/// Class 0 is background; class k ≥ 1 always draws ShapeKind(k − 1).
struct SynthSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    int num_classes = 4;
    int min_shapes = 1;
    int max_shapes = 4;
    std::size_t train_count = 100;
    std::size_t val_count = 20;
    double noise_std = 0.04;
    /// Per-instance uniform offset added to each class's base colour.
    double color_jitter = 0.25;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    int num_classes = 0;
    std::vector<Image> images;
    std::vector<LabelMap> labels;
    /// Classes whose shape was drawn into each image (occlusion may hide them).
    std::vector<std::vector<int>> drawn_classes;

    std::size_t size() const { return images.size(); }
};

struct SyntheticData {
    Dataset train;
    Dataset val;
};

/// Pixel values are quantised to multiples of 1/255 so the on-disk 8-bit
/// form reproduces them exactly. `threads` ≤ 1 generates serially; output
/// does not depend on it.
SyntheticData generate_synthetic(const SynthSpec& spec, std::size_t threads = 1);

/// One image; exposed for tests and the Python module.
void render_synthetic_image(const SynthSpec& spec, Rng rng, Image& image, LabelMap& label, std::vector<int>& drawn);

/// Classes present in a label map, ascending, ignore label excluded.
std::vector<int> present_classes(const LabelMap& label);

// ---------------------------------------------------------------------------
// Partial Dataset Full Labels

struct PdflSpec {
    int min_images_per_class = 5;
    int min_distinct_classes = 2;
};

struct PdflStep {
    std::size_t image = 0;
    int distinct_classes = 0;
    /// Classes at minimum coverage when this image was chosen.
    std::vector<int> least_sampled;
    std::vector<int> coverage_before;
};

struct PdflResult {
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> unlabelled;
    std::vector<PdflStep> audit;
};

/// Greedily selects fully labelled images until every class occurs in at
/// least `min_images_per_class` of them. Each pick has at least
/// `min_distinct_classes` classes and contains a currently least-covered
/// class. Throws Unsatisfiable when no further pick can make progress.
PdflResult partition_pdfl(std::span<const LabelMap> labels, int num_classes, const PdflSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Partial Labels Full Dataset

struct LabelBudget {
    enum class Kind { OnePixel, Fraction };
    Kind kind = Kind::OnePixel;
    double fraction = 0.0;

    static LabelBudget one_pixel() { return {Kind::OnePixel, 0.0}; }
    static LabelBudget of_fraction(double f);
};

struct PlfdSeed {
    std::size_t pixel = 0;
    int step = 0;
};

struct PlfdClassAudit {
    int class_id = 0;
    std::size_t class_pixels = 0;
    std::size_t revealed = 0;
    std::size_t revealed_before_last_step = 0;
    int steps = 0;
    std::vector<PlfdSeed> seeds;
};

struct PlfdResult {
    LabelMap partial;
    std::vector<PlfdClassAudit> classes;
};

/// Reveals, per present class, one random seed pixel and then grows it by
/// 5×5 square dilation clipped to the class region until the revealed
/// fraction reaches the budget. A region that stops growing before the
/// budget (disconnected class) receives a fresh seed at that step.
/// Unrevealed pixels become kIgnoreLabel.
PlfdResult partition_plfd(const LabelMap& full, const LabelBudget& budget, Rng& rng);

/// One 5×5 dilation of `mask` intersected with `region` (both H×W 0/1).
std::vector<std::uint8_t> dilate5_within(const std::vector<std::uint8_t>& mask, const std::vector<std::uint8_t>& region,
                                         std::size_t height, std::size_t width);

// ---------------------------------------------------------------------------
// Mixing augmentations

struct Box {
    std::size_t y0 = 0, x0 = 0, h = 0, w = 0;
};

/// 1 where the output takes the "A"/patch source.
using PixelMask = std::vector<std::uint8_t>;

struct ImageLabel {
    Image image;
    LabelMap label;
};

/// Axis-aligned patch covering a uniform [0.25, 0.5] fraction of the image.
Box random_patch(std::size_t height, std::size_t width, Rng& rng);
PixelMask box_mask(std::size_t height, std::size_t width, const Box& box);
/// ⌈k/2⌉ of the k classes present in `label`, chosen uniformly, ascending.
std::vector<int> choose_classmix_classes(const LabelMap& label, Rng& rng);
PixelMask class_mask(const LabelMap& label, std::span<const int> classes);

/// Takes A where mask is set, B elsewhere.
ImageLabel apply_mix(const PixelMask& mask, const Image& image_a, const LabelMap& label_a, const Image& image_b,
                     const LabelMap& label_b);
/// Masked pixels get the image mean colour and kIgnoreLabel.
ImageLabel apply_cutout(const PixelMask& mask, const Image& image, const LabelMap& label);

ImageLabel cutout(const Image& image, const LabelMap& label, Rng& rng);
ImageLabel cutmix(const Image& image_a, const LabelMap& label_a, const Image& image_b, const LabelMap& label_b, Rng& rng);
/// Requires label_a to contain at least one class.
ImageLabel classmix(const Image& image_a, const LabelMap& label_a, const Image& image_b, const LabelMap& label_b, Rng& rng);

Image flip_horizontal(const Image& image);
LabelMap flip_horizontal(const LabelMap& label);

}  // namespace reco

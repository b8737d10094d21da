#include "reco/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "reco/parallel.hpp"

namespace reco {

namespace {

constexpr std::array<std::array<double, 3>, kShapeKinds> kClassColours{{
    {0.85, 0.20, 0.20},
    {0.20, 0.75, 0.25},
    {0.20, 0.30, 0.85},
    {0.90, 0.85, 0.20},
    {0.80, 0.25, 0.80},
    {0.20, 0.80, 0.80},
    {0.95, 0.55, 0.15},
    {0.50, 0.30, 0.70},
}};

bool inside(ShapeKind kind, double dy, double dx, double s, double aspect) {
    const double ay = std::abs(dy);
    const double ax = std::abs(dx);
    switch (kind) {
        case ShapeKind::Rectangle: return ay <= s * aspect && ax <= s;
        case ShapeKind::Circle: return dy * dy + dx * dx <= s * s;
        case ShapeKind::Triangle: return dy >= -s && dy <= s && ax <= (dy + s) * 0.5;
        case ShapeKind::Diamond: return ay + ax <= s;
        case ShapeKind::Cross: return (ay <= s / 3.0 && ax <= s) || (ax <= s / 3.0 && ay <= s);
        case ShapeKind::Ring: {
            const double r2 = dy * dy + dx * dx;
            return r2 <= s * s && r2 >= 0.25 * s * s;
        }
        case ShapeKind::Ellipse: return (dx * dx) / (s * s) + (dy * dy) / (0.25 * s * s) <= 1.0;
        case ShapeKind::Hexagon: {
            constexpr double r3 = 1.7320508075688772;
            return ay <= 0.5 * r3 * s && r3 * ax + ay <= r3 * s;
        }
    }
    return false;
}

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

void SynthSpec::validate() const {
    require(num_classes >= 3 && num_classes <= kShapeKinds + 1, ErrorKind::Config,
            "num_classes must be in [3, " + std::to_string(kShapeKinds + 1) + "]");
    require(height >= 8 && width >= 8, ErrorKind::Config, "image size must be at least 8x8");
    require(min_shapes >= 0 && max_shapes >= min_shapes, ErrorKind::Config, "need 0 <= min_shapes <= max_shapes");
    require(noise_std >= 0.0 && color_jitter >= 0.0, ErrorKind::Config, "noise_std and color_jitter must be non-negative");
}

void render_synthetic_image(const SynthSpec& spec, Rng rng, Image& image, LabelMap& label, std::vector<int>& drawn) {
    const auto h = spec.height;
    const auto w = spec.width;
    image = Image(h, w);
    label = LabelMap(h, w, 0);
    drawn.clear();

    std::array<double, 3> background{};
    for (auto& c : background) c = rng.uniform(0.3, 0.7);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) image.at(y, x, c) = background[c];

    const auto span = static_cast<std::uint64_t>(spec.max_shapes - spec.min_shapes + 1);
    const int count = spec.min_shapes + static_cast<int>(rng.below(span));
    const double min_side = static_cast<double>(std::min(h, w));
    const double r_lo = std::max(3.0, min_side / 10.0);
    const double r_hi = std::max(r_lo + 1.0, min_side / 4.0);

    for (int s = 0; s < count; ++s) {
        const int cls = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes - 1)));
        const auto kind = static_cast<ShapeKind>(cls - 1);
        const double radius = rng.uniform(r_lo, r_hi);
        const double aspect = rng.uniform(0.5, 1.0);
        const double cy = rng.uniform(0.0, static_cast<double>(h));
        const double cx = rng.uniform(0.0, static_cast<double>(w));
        std::array<double, 3> colour{};
        for (std::size_t c = 0; c < 3; ++c)
            colour[c] = std::clamp(kClassColours[static_cast<std::size_t>(cls - 1)][c] +
                                       rng.uniform(-spec.color_jitter, spec.color_jitter),
                                   0.0, 1.0);
        drawn.push_back(cls);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                if (!inside(kind, static_cast<double>(y) + 0.5 - cy, static_cast<double>(x) + 0.5 - cx, radius, aspect))
                    continue;
                label.at(y, x) = static_cast<Label>(cls);
                for (std::size_t c = 0; c < 3; ++c) image.at(y, x, c) = colour[c];
            }
    }
    for (auto& v : image.values) v = quantize(v + spec.noise_std * rng.normal());

    std::sort(drawn.begin(), drawn.end());
    drawn.erase(std::unique(drawn.begin(), drawn.end()), drawn.end());
}

SyntheticData generate_synthetic(const SynthSpec& spec, std::size_t threads) {
    spec.validate();
    SyntheticData out;
    const Rng root(spec.seed);
    auto fill = [&](Dataset& ds, std::size_t n, std::uint64_t split) {
        ds.num_classes = spec.num_classes;
        ds.images.resize(n);
        ds.labels.resize(n);
        ds.drawn_classes.resize(n);
        parallel_for(n, threads, [&](std::size_t i) {
            render_synthetic_image(spec, root.fork({split, i}), ds.images[i], ds.labels[i], ds.drawn_classes[i]);
        });
    };
    fill(out.train, spec.train_count, 0);
    fill(out.val, spec.val_count, 1);
    return out;
}

std::vector<int> present_classes(const LabelMap& label) {
    std::array<bool, 256> seen{};
    for (auto v : label.values) seen[v] = true;
    std::vector<int> out;
    for (int c = 0; c < 255; ++c)
        if (seen[static_cast<std::size_t>(c)]) out.push_back(c);
    return out;
}

// ---------------------------------------------------------------------------

PdflResult partition_pdfl(std::span<const LabelMap> labels, int num_classes, const PdflSpec& spec, Rng& rng) {
    require(!labels.empty(), ErrorKind::InvalidArgument, "dataset is empty");
    require(spec.min_images_per_class >= 1 && spec.min_distinct_classes >= 1, ErrorKind::Config,
            "partition thresholds must be positive");

    const std::size_t n = labels.size();
    std::vector<std::vector<int>> classes(n);
    std::vector<bool> eligible(n);
    for (std::size_t i = 0; i < n; ++i) {
        classes[i] = present_classes(labels[i]);
        std::erase_if(classes[i], [&](int c) { return c >= num_classes; });
        eligible[i] = static_cast<int>(classes[i].size()) >= spec.min_distinct_classes;
    }

    std::vector<int> coverage(static_cast<std::size_t>(num_classes), 0);
    std::vector<bool> taken(n, false);
    PdflResult result;

    while (true) {
        const int least = *std::min_element(coverage.begin(), coverage.end());
        if (least >= spec.min_images_per_class) break;
        std::vector<int> least_sampled;
        for (int c = 0; c < num_classes; ++c)
            if (coverage[static_cast<std::size_t>(c)] == least) least_sampled.push_back(c);

        std::vector<std::size_t> options;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i] || !eligible[i]) continue;
            const bool hit = std::any_of(classes[i].begin(), classes[i].end(), [&](int c) {
                return coverage[static_cast<std::size_t>(c)] == least;
            });
            if (hit) options.push_back(i);
        }
        if (options.empty()) {
            std::string names;
            for (int c : least_sampled) names += (names.empty() ? "" : ",") + std::to_string(c);
            fail(ErrorKind::Unsatisfiable, "no remaining image with >= " + std::to_string(spec.min_distinct_classes) +
                                               " classes contains least-sampled class(es) {" + names + "}");
        }
        const std::size_t pick = options[rng.below(options.size())];
        result.audit.push_back(PdflStep{pick, static_cast<int>(classes[pick].size()), least_sampled, coverage});
        taken[pick] = true;
        result.labelled.push_back(pick);
        for (int c : classes[pick]) ++coverage[static_cast<std::size_t>(c)];
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) result.unlabelled.push_back(i);
    return result;
}

// ---------------------------------------------------------------------------

LabelBudget LabelBudget::of_fraction(double f) {
    require(f > 0.0 && f <= 1.0, ErrorKind::Config, "label fraction must be in (0, 1]");
    return {Kind::Fraction, f};
}

std::vector<std::uint8_t> dilate5_within(const std::vector<std::uint8_t>& mask, const std::vector<std::uint8_t>& region,
                                         std::size_t height, std::size_t width) {
    // Separable square dilation: rows then columns, radius 2.
    std::vector<std::uint8_t> horiz(mask.size(), 0);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t lo = x >= 2 ? x - 2 : 0;
            const std::size_t hi = std::min(width - 1, x + 2);
            std::uint8_t v = 0;
            for (std::size_t k = lo; k <= hi && !v; ++k) v = mask[y * width + k];
            horiz[y * width + x] = v;
        }
    std::vector<std::uint8_t> out(mask.size(), 0);
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t lo = y >= 2 ? y - 2 : 0;
        const std::size_t hi = std::min(height - 1, y + 2);
        for (std::size_t x = 0; x < width; ++x) {
            std::uint8_t v = 0;
            for (std::size_t k = lo; k <= hi && !v; ++k) v = horiz[k * width + x];
            out[y * width + x] = static_cast<std::uint8_t>(v && region[y * width + x]);
        }
    }
    return out;
}

PlfdResult partition_plfd(const LabelMap& full, const LabelBudget& budget, Rng& rng) {
    PlfdResult result;
    result.partial = LabelMap(full.height, full.width, kIgnoreLabel);
    const std::size_t n = full.size();

    for (int c : present_classes(full)) {
        std::vector<std::uint8_t> region(n, 0);
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (full.values[i] == c) {
                region[i] = 1;
                members.push_back(i);
            }

        PlfdClassAudit audit;
        audit.class_id = c;
        audit.class_pixels = members.size();

        std::vector<std::uint8_t> mask(n, 0);
        auto add_seed = [&](int step) {
            std::vector<std::size_t> free;
            for (auto i : members)
                if (!mask[i]) free.push_back(i);
            const std::size_t pixel = free[rng.below(free.size())];
            mask[pixel] = 1;
            audit.seeds.push_back(PlfdSeed{pixel, step});
        };
        add_seed(0);
        std::size_t revealed = 1;
        std::size_t before = 0;

        auto reached = [&](std::size_t r) {
            return budget.kind == LabelBudget::Kind::OnePixel ||
                   static_cast<double>(r) >= budget.fraction * static_cast<double>(members.size());
        };
        int step = 0;
        while (!reached(revealed)) {
            ++step;
            before = revealed;
            auto grown = dilate5_within(mask, region, full.height, full.width);
            const auto grown_count = static_cast<std::size_t>(std::count(grown.begin(), grown.end(), 1));
            mask = std::move(grown);
            if (grown_count == revealed) add_seed(step);
            revealed = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
        }
        audit.revealed = revealed;
        audit.revealed_before_last_step = step == 0 ? 0 : before;
        audit.steps = step;
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i]) result.partial.values[i] = static_cast<Label>(c);
        result.classes.push_back(std::move(audit));
    }
    return result;
}

// ---------------------------------------------------------------------------

Box random_patch(std::size_t height, std::size_t width, Rng& rng) {
    const double area = rng.uniform(0.25, 0.5);
    const double side = std::sqrt(area);
    Box b;
    b.h = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(side * static_cast<double>(height))), 1, height);
    b.w = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(side * static_cast<double>(width))), 1, width);
    b.y0 = rng.below(height - b.h + 1);
    b.x0 = rng.below(width - b.w + 1);
    return b;
}

PixelMask box_mask(std::size_t height, std::size_t width, const Box& box) {
    require(box.y0 + box.h <= height && box.x0 + box.w <= width, ErrorKind::InvalidArgument, "patch exceeds image");
    PixelMask m(height * width, 0);
    for (std::size_t y = box.y0; y < box.y0 + box.h; ++y)
        for (std::size_t x = box.x0; x < box.x0 + box.w; ++x) m[y * width + x] = 1;
    return m;
}

std::vector<int> choose_classmix_classes(const LabelMap& label, Rng& rng) {
    auto classes = present_classes(label);
    require(!classes.empty(), ErrorKind::InvalidArgument, "classmix source has no labelled class");
    const std::size_t keep = (classes.size() + 1) / 2;
    for (std::size_t i = 0; i < keep; ++i) std::swap(classes[i], classes[i + rng.below(classes.size() - i)]);
    classes.resize(keep);
    std::sort(classes.begin(), classes.end());
    return classes;
}

PixelMask class_mask(const LabelMap& label, std::span<const int> classes) {
    PixelMask m(label.size(), 0);
    for (std::size_t i = 0; i < label.size(); ++i)
        m[i] = static_cast<std::uint8_t>(std::find(classes.begin(), classes.end(), label.values[i]) != classes.end());
    return m;
}

ImageLabel apply_mix(const PixelMask& mask, const Image& image_a, const LabelMap& label_a, const Image& image_b,
                     const LabelMap& label_b) {
    require(image_a.height == image_b.height && image_a.width == image_b.width && label_a.size() == label_b.size() &&
                label_a.size() == image_a.height * image_a.width && mask.size() == label_a.size(),
            ErrorKind::ShapeMismatch, "mix inputs differ in size");
    ImageLabel out{image_b, label_b};
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        out.label.values[i] = label_a.values[i];
        for (std::size_t c = 0; c < 3; ++c) out.image.values[i * 3 + c] = image_a.values[i * 3 + c];
    }
    return out;
}

ImageLabel apply_cutout(const PixelMask& mask, const Image& image, const LabelMap& label) {
    require(mask.size() == label.size() && label.size() == image.height * image.width, ErrorKind::ShapeMismatch,
            "cutout inputs differ in size");
    std::array<double, 3> mean{};
    const std::size_t n = label.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) mean[c] += image.values[i * 3 + c];
    for (auto& m : mean) m /= static_cast<double>(n);
    ImageLabel out{image, label};
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        out.label.values[i] = kIgnoreLabel;
        for (std::size_t c = 0; c < 3; ++c) out.image.values[i * 3 + c] = mean[c];
    }
    return out;
}

ImageLabel cutout(const Image& image, const LabelMap& label, Rng& rng) {
    return apply_cutout(box_mask(image.height, image.width, random_patch(image.height, image.width, rng)), image, label);
}

ImageLabel cutmix(const Image& image_a, const LabelMap& label_a, const Image& image_b, const LabelMap& label_b, Rng& rng) {
    const auto mask = box_mask(image_a.height, image_a.width, random_patch(image_a.height, image_a.width, rng));
    return apply_mix(mask, image_a, label_a, image_b, label_b);
}

ImageLabel classmix(const Image& image_a, const LabelMap& label_a, const Image& image_b, const LabelMap& label_b, Rng& rng) {
    const auto classes = choose_classmix_classes(label_a, rng);
    return apply_mix(class_mask(label_a, classes), image_a, label_a, image_b, label_b);
}

Image flip_horizontal(const Image& image) {
    Image out(image.height, image.width);
    for (std::size_t y = 0; y < image.height; ++y)
        for (std::size_t x = 0; x < image.width; ++x)
            for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
    return out;
}

LabelMap flip_horizontal(const LabelMap& label) {
    LabelMap out(label.height, label.width);
    for (std::size_t y = 0; y < label.height; ++y)
        for (std::size_t x = 0; x < label.width; ++x) out.at(y, x) = label.at(y, label.width - 1 - x);
    return out;
}

}  // namespace reco

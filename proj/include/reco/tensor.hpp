#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "reco/error.hpp"

namespace reco {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Label = std::uint8_t;
inline constexpr Label kIgnoreLabel = 255;

/// B×H×W×C activations stored pixel-major: row (b·H + y)·W + x of `values`
/// holds the C channels of that pixel. Every pixel-wise op in the project is a
/// row op and every 1×1 convolution is a single matrix product.
struct Tensor4 {
    std::size_t batch = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    Matrix values;

    Tensor4() = default;
    Tensor4(std::size_t b, std::size_t h, std::size_t w, std::size_t c)
        : batch(b), height(h), width(w), values(Matrix::Zero(static_cast<Eigen::Index>(b * h * w), static_cast<Eigen::Index>(c))) {}

    std::size_t channels() const { return static_cast<std::size_t>(values.cols()); }
    std::size_t pixels() const { return batch * height * width; }
    std::size_t pixel_index(std::size_t b, std::size_t y, std::size_t x) const { return (b * height + y) * width + x; }

    double& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
        return values(static_cast<Eigen::Index>(pixel_index(b, y, x)), static_cast<Eigen::Index>(c));
    }
    double at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
        return values(static_cast<Eigen::Index>(pixel_index(b, y, x)), static_cast<Eigen::Index>(c));
    }

    bool same_grid(const Tensor4& o) const { return batch == o.batch && height == o.height && width == o.width; }
};

/// Integer class map, row-major H×W per image; kIgnoreLabel marks undefined pixels.
struct LabelMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<Label> values;

    LabelMap() = default;
    LabelMap(std::size_t h, std::size_t w, Label fill = 0) : height(h), width(w), values(h * w, fill) {}

    Label& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
    Label at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
    std::size_t size() const { return values.size(); }
    bool operator==(const LabelMap&) const = default;
};

/// RGB image in [0, 1], row-major H×W×3.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    Image() = default;
    Image(std::size_t h, std::size_t w) : height(h), width(w), values(h * w * 3, 0.0) {}

    double& at(std::size_t y, std::size_t x, std::size_t c) { return values[(y * width + x) * 3 + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c) const { return values[(y * width + x) * 3 + c]; }
    bool operator==(const Image&) const = default;
};

/// Stacks images into a B×H×W×3 tensor; all images must share a size.
Tensor4 stack_images(std::span<const Image> images);
/// Concatenates label maps in batch order (the same order stack_images uses).
std::vector<Label> stack_labels(std::span<const LabelMap> labels);

}  // namespace reco

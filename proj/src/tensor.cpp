#include "reco/tensor.hpp"

namespace reco {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::EmptyNegatives: return "EmptyNegatives";
        case ErrorKind::EmptyPool: return "EmptyPool";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::AllIgnored: return "AllIgnored";
        case ErrorKind::Unsatisfiable: return "Unsatisfiable";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Config: return "Config";
        case ErrorKind::Data: return "Data";
    }
    return "Unknown";
}

Tensor4 stack_images(std::span<const Image> images) {
    require(!images.empty(), ErrorKind::ShapeMismatch, "empty image batch");
    const auto h = images.front().height;
    const auto w = images.front().width;
    Tensor4 t(images.size(), h, w, 3);
    for (std::size_t b = 0; b < images.size(); ++b) {
        const auto& img = images[b];
        require(img.height == h && img.width == w, ErrorKind::ShapeMismatch, "images in a batch must share a size");
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t c = 0; c < 3; ++c) t.at(b, y, x, c) = img.at(y, x, c);
    }
    return t;
}

std::vector<Label> stack_labels(std::span<const LabelMap> labels) {
    std::vector<Label> out;
    for (const auto& l : labels) out.insert(out.end(), l.values.begin(), l.values.end());
    return out;
}

}  // namespace reco

#pragma once

#include <vector>

#include "reco/core.hpp"
#include "reco/rng.hpp"

namespace fixture {

inline reco::Matrix random_matrix(reco::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    reco::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

inline reco::Matrix random_unit_rows(reco::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    reco::Matrix m = random_matrix(rng, rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) m.row(r).normalize();
    return m;
}

inline reco::Vector random_unit(reco::Rng& rng, Eigen::Index m) {
    reco::Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v(i) = rng.normal();
    return v.normalized();
}

inline reco::DenseRepresentation random_representation(reco::Rng& rng, std::size_t b, std::size_t h, std::size_t w,
                                                       std::size_t m) {
    reco::Tensor4 t(b, h, w, m);
    t.values = random_matrix(rng, static_cast<Eigen::Index>(b * h * w), static_cast<Eigen::Index>(m));
    return reco::normalize_pixels(std::move(t));
}

inline std::vector<reco::Label> random_labels(reco::Rng& rng, std::size_t n, int num_classes) {
    std::vector<reco::Label> out(n);
    for (auto& l : out) l = static_cast<reco::Label>(rng.below(static_cast<std::uint64_t>(num_classes)));
    return out;
}

}  // namespace fixture

namespace fixture {

inline reco::Tensor4 random_images(reco::Rng& rng, std::size_t b, std::size_t h, std::size_t w) {
    reco::Tensor4 t(b, h, w, 3);
    for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values.data()[i] = rng.uniform();
    return t;
}

}  // namespace fixture

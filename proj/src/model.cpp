#include "reco/model.hpp"

#include <cmath>
#include <string>

namespace reco {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
    return m;
}

// 3×3, padding 1: row p of the result holds the zero-padded neighbourhood of
// pixel p, ordered (ky, kx, cin).
Matrix im2col(const Matrix& in, std::size_t batch, std::size_t h, std::size_t w) {
    const auto cin = in.cols();
    Matrix cols = Matrix::Zero(in.rows(), cin * 9);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const auto row = static_cast<Eigen::Index>((b * h + y) * w + x);
                for (int ky = 0; ky < 3; ++ky) {
                    const long sy = static_cast<long>(y) + ky - 1;
                    if (sy < 0 || sy >= static_cast<long>(h)) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const long sx = static_cast<long>(x) + kx - 1;
                        if (sx < 0 || sx >= static_cast<long>(w)) continue;
                        const auto src = static_cast<Eigen::Index>((b * h + static_cast<std::size_t>(sy)) * w +
                                                                   static_cast<std::size_t>(sx));
                        cols.block(row, (ky * 3 + kx) * cin, 1, cin) = in.row(src);
                    }
                }
            }
    return cols;
}

Matrix col2im(const Matrix& dcols, std::size_t batch, std::size_t h, std::size_t w, Eigen::Index cin) {
    Matrix din = Matrix::Zero(dcols.rows(), cin);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const auto row = static_cast<Eigen::Index>((b * h + y) * w + x);
                for (int ky = 0; ky < 3; ++ky) {
                    const long sy = static_cast<long>(y) + ky - 1;
                    if (sy < 0 || sy >= static_cast<long>(h)) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const long sx = static_cast<long>(x) + kx - 1;
                        if (sx < 0 || sx >= static_cast<long>(w)) continue;
                        const auto src = static_cast<Eigen::Index>((b * h + static_cast<std::size_t>(sy)) * w +
                                                                   static_cast<std::size_t>(sx));
                        din.row(src) += dcols.block(row, (ky * 3 + kx) * cin, 1, cin);
                    }
                }
            }
    return din;
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& grad, const Matrix& pre) {
    return (pre.array() > 0.0).select(grad, 0.0);
}

}  // namespace

void ModelConfig::validate() const {
    require(num_classes >= 2 && num_classes < kIgnoreLabel, ErrorKind::Config, "num_classes must be in [2, 254]");
    require(embed_dim >= 1, ErrorKind::Config, "embed_dim must be positive");
}

ToyModelParams ToyModelParams::zeros(const ModelConfig& cfg) {
    cfg.validate();
    const auto c = cfg.num_classes;
    const auto m = cfg.embed_dim;
    constexpr auto k1 = static_cast<Eigen::Index>(kKernel * kKernel * kInputChannels);
    constexpr auto k2 = static_cast<Eigen::Index>(kKernel * kKernel * kHiddenChannels);
    constexpr auto hid = static_cast<Eigen::Index>(kHiddenChannels);
    constexpr auto feat = static_cast<Eigen::Index>(kFeatureChannels);
    return ToyModelParams{Matrix::Zero(k1, hid), Matrix::Zero(1, hid), Matrix::Zero(k2, feat), Matrix::Zero(1, feat),
                          Matrix::Zero(feat, c), Matrix::Zero(1, c), Matrix::Zero(feat, m), Matrix::Zero(1, m)};
}

ToyModelParams ToyModelParams::initialize(const ModelConfig& cfg, Rng& rng) {
    auto p = zeros(cfg);
    auto init = [&](Matrix& w) { w = uniform_matrix(w.rows(), w.cols(), 1.0 / std::sqrt(static_cast<double>(w.rows())), rng); };
    init(p.conv1_w);
    init(p.conv2_w);
    init(p.cls_w);
    init(p.rep_w);
    return p;
}

ModelConfig ToyModelParams::config() const {
    return ModelConfig{static_cast<int>(cls_w.cols()), static_cast<int>(rep_w.cols())};
}

std::size_t ToyModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

double& ToyModelParams::flat(std::size_t index) {
    double* found = nullptr;
    std::size_t offset = 0;
    for_each([&](std::string_view, Matrix& m) {
        const auto n = static_cast<std::size_t>(m.size());
        if (!found && index < offset + n) found = m.data() + (index - offset);
        offset += n;
    });
    if (!found) fail(ErrorKind::InvalidArgument, "parameter index " + std::to_string(index) + " out of range");
    return *found;
}

bool ToyModelParams::same_shape(const ToyModelParams& o) const {
    bool same = true;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
    for_each([&](std::string_view, const Matrix& m) { shapes.emplace_back(m.rows(), m.cols()); });
    std::size_t i = 0;
    o.for_each([&](std::string_view, const Matrix& m) {
        same = same && shapes[i].first == m.rows() && shapes[i].second == m.cols();
        ++i;
    });
    return same;
}

double ToyModelParams::squared_norm() const {
    double s = 0.0;
    for_each([&](std::string_view, const Matrix& m) { s += m.squaredNorm(); });
    return s;
}

bool ToyModelParams::all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
}

ForwardResult forward(const ToyModelParams& params, const Tensor4& images, ForwardMode mode) {
    require(images.channels() == kInputChannels, ErrorKind::ShapeMismatch, "input must have 3 channels");
    require(images.pixels() > 0, ErrorKind::ShapeMismatch, "empty input");
    require(images.values.allFinite(), ErrorKind::ShapeMismatch, "input has non-finite values");

    ForwardResult out;
    auto& cache = out.cache;
    cache.batch = images.batch;
    cache.height = images.height;
    cache.width = images.width;

    cache.cols1 = im2col(images.values, images.batch, images.height, images.width);
    cache.pre1 = cache.cols1 * params.conv1_w;
    cache.pre1.rowwise() += params.conv1_b.row(0);
    cache.act1 = relu(cache.pre1);

    cache.cols2 = im2col(cache.act1, images.batch, images.height, images.width);
    cache.pre2 = cache.cols2 * params.conv2_w;
    cache.pre2.rowwise() += params.conv2_b.row(0);

    out.features = Tensor4(images.batch, images.height, images.width, 0);
    out.features.values = relu(cache.pre2);
    const Matrix& z = out.features.values;

    out.logits = Tensor4(images.batch, images.height, images.width, 0);
    out.logits.values = z * params.cls_w;
    out.logits.values.rowwise() += params.cls_b.row(0);

    if (mode == ForwardMode::Train) {
        cache.raw_rep = z * params.rep_w;
        cache.raw_rep.rowwise() += params.rep_b.row(0);
        cache.rep_norms = cache.raw_rep.rowwise().norm();
        Tensor4 raw(images.batch, images.height, images.width, 0);
        raw.values = cache.raw_rep;
        out.representation = normalize_pixels(std::move(raw));
    }
    return out;
}

ToyModelParams backward(const ToyModelParams& params, const ForwardCache& cache, const Matrix& dlogits,
                        const Matrix* drep) {
    const Matrix z = relu(cache.pre2);
    require(dlogits.rows() == z.rows() && dlogits.cols() == params.cls_w.cols(), ErrorKind::ShapeMismatch,
            "logit gradient shape mismatch");
    ToyModelParams g;

    g.cls_w = z.transpose() * dlogits;
    g.cls_b = dlogits.colwise().sum();
    Matrix dz = dlogits * params.cls_w.transpose();

    if (drep != nullptr) {
        require(cache.raw_rep.rows() == z.rows(), ErrorKind::ShapeMismatch, "representation gradient needs a train-mode forward");
        require(drep->rows() == z.rows() && drep->cols() == params.rep_w.cols(), ErrorKind::ShapeMismatch,
                "representation gradient shape mismatch");
        // r = u/|u|  ⇒  du = (dr − r (r·dr)) / |u|
        const Matrix r = cache.raw_rep.array().colwise() / cache.rep_norms.array();
        const Vector proj = (r.array() * drep->array()).rowwise().sum();
        const Matrix du = ((*drep) - (r.array().colwise() * proj.array()).matrix()).array().colwise() /
                          cache.rep_norms.array();
        g.rep_w = z.transpose() * du;
        g.rep_b = du.colwise().sum();
        dz.noalias() += du * params.rep_w.transpose();
    } else {
        g.rep_w = Matrix::Zero(params.rep_w.rows(), params.rep_w.cols());
        g.rep_b = Matrix::Zero(1, params.rep_b.cols());
    }

    const Matrix dpre2 = relu_backward(dz, cache.pre2);
    g.conv2_w = cache.cols2.transpose() * dpre2;
    g.conv2_b = dpre2.colwise().sum();
    const Matrix dcols2 = dpre2 * params.conv2_w.transpose();
    const Matrix dact1 = col2im(dcols2, cache.batch, cache.height, cache.width, params.conv1_w.cols());
    const Matrix dpre1 = relu_backward(dact1, cache.pre1);
    g.conv1_w = cache.cols1.transpose() * dpre1;
    g.conv1_b = dpre1.colwise().sum();
    return g;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
    p = p.array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
}

PseudoLabels confidence_and_pseudo(const Tensor4& logits) {
    require(logits.values.allFinite(), ErrorKind::InvalidArgument, "logits must be finite");
    const Matrix prob = softmax_rows(logits.values);
    PseudoLabels out;
    out.labels.resize(logits.pixels());
    out.confidence.resize(logits.pixels());
    for (Eigen::Index i = 0; i < prob.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < prob.cols(); ++c)
            if (prob(i, c) > prob(i, best)) best = c;
        out.labels[static_cast<std::size_t>(i)] = static_cast<Label>(best);
        out.confidence[static_cast<std::size_t>(i)] = prob(i, best);
    }
    return out;
}

void OptimConfig::validate() const {
    require(base_lr > 0.0, ErrorKind::Config, "base_lr must be positive");
    require(power > 0.0, ErrorKind::Config, "power must be positive");
    require(momentum >= 0.0 && momentum < 1.0, ErrorKind::Config, "momentum must be in [0, 1)");
    require(weight_decay >= 0.0, ErrorKind::Config, "weight_decay must be non-negative");
    require(total_iters >= 1, ErrorKind::Config, "total_iters must be positive");
}

double poly_learning_rate(int iter, const OptimConfig& cfg) {
    require(iter >= 0 && iter <= cfg.total_iters, ErrorKind::InvalidArgument, "iteration outside schedule");
    return cfg.base_lr * std::pow(1.0 - static_cast<double>(iter) / cfg.total_iters, cfg.power);
}

void sgd_step(ToyModelParams& params, const ToyModelParams& grads, SgdState& state, int iter, const OptimConfig& cfg) {
    require(params.same_shape(grads) && params.same_shape(state.velocity), ErrorKind::ShapeMismatch,
            "parameter, gradient and momentum shapes differ");
    const double lr = poly_learning_rate(iter, cfg);
    std::vector<const Matrix*> g;
    grads.for_each([&](std::string_view, const Matrix& m) { g.push_back(&m); });
    std::vector<Matrix*> v;
    state.velocity.for_each([&](std::string_view, Matrix& m) { v.push_back(&m); });
    std::size_t i = 0;
    params.for_each([&](std::string_view, Matrix& p) {
        Matrix& vel = *v[i];
        vel = cfg.momentum * vel + *g[i];
        if (cfg.weight_decay != 0.0) vel += cfg.weight_decay * p;
        p -= lr * vel;
        ++i;
    });
}

void ema_update(TeacherState& teacher, const ToyModelParams& student) {
    require(teacher.params.same_shape(student), ErrorKind::ShapeMismatch, "teacher and student shapes differ");
    require(teacher.decay >= 0.0 && teacher.decay <= 1.0, ErrorKind::InvalidArgument, "decay must be in [0, 1]");
    std::vector<const Matrix*> s;
    student.for_each([&](std::string_view, const Matrix& m) { s.push_back(&m); });
    std::size_t i = 0;
    teacher.params.for_each([&](std::string_view, Matrix& t) {
        t = teacher.decay * t + (1.0 - teacher.decay) * *s[i];
        ++i;
    });
}

}  // namespace reco

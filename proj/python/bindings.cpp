#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "reco/cli.hpp"
#include "reco/data.hpp"
#include "reco/eval.hpp"

namespace py = pybind11;
using namespace reco;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

LabelMap label_from(const U8Array& a) {
    if (a.ndim() != 2) throw py::value_error("label map must be 2-D");
    LabelMap m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    return m;
}

U8Array labels_to(std::span<const LabelMap> maps) {
    const auto h = maps.empty() ? 0 : maps.front().height;
    const auto w = maps.empty() ? 0 : maps.front().width;
    U8Array out({maps.size(), h, w});
    auto* p = out.mutable_data();
    for (const auto& m : maps) p = std::copy(m.values.begin(), m.values.end(), p);
    return out;
}

F64Array images_to(std::span<const Image> images) {
    const auto h = images.empty() ? 0 : images.front().height;
    const auto w = images.empty() ? 0 : images.front().width;
    F64Array out({images.size(), h, w, std::size_t{3}});
    auto* p = out.mutable_data();
    for (const auto& im : images) p = std::copy(im.values.begin(), im.values.end(), p);
    return out;
}

py::dict dataset_to(const Dataset& ds) {
    py::dict d;
    d["images"] = images_to(ds.images);
    d["labels"] = labels_to(ds.labels);
    d["drawn_classes"] = ds.drawn_classes;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Regional contrast (ReCo) loss, sampling, partitions and metrics";

    py::register_exception<Error>(m, "RecoError", PyExc_ValueError);

    m.def(
        "normalize_rows",
        [](const Matrix& raw) {
            Tensor4 t(1, 1, static_cast<std::size_t>(raw.rows()), static_cast<std::size_t>(raw.cols()));
            t.values = raw;
            return normalize_pixels(std::move(t)).data.values;
        },
        py::arg("vectors"), "Scale each row to unit norm.");

    m.def(
        "reco_loss",
        [](const std::map<int, Matrix>& queries, const std::map<int, Vector>& positives,
           const std::map<int, Matrix>& negatives, double temperature, bool renormalize_positive) {
            std::vector<QueryBundle> bundles;
            for (const auto& [c, q] : queries) {
                QueryBundle b;
                b.class_id = c;
                b.queries = q;
                b.confidences.assign(static_cast<std::size_t>(q.rows()), 0.0);
                bundles.push_back(std::move(b));
            }
            LossConfig cfg;
            cfg.temperature = temperature;
            cfg.renormalize_positive = renormalize_positive;
            auto r = reco_loss(bundles, positives, negatives, cfg);
            std::map<int, Matrix> grads;
            for (std::size_t i = 0; i < bundles.size(); ++i) grads[bundles[i].class_id] = std::move(r.query_gradients[i]);
            return py::make_tuple(r.loss, grads);
        },
        py::arg("queries"), py::arg("positives"), py::arg("negatives"), py::arg("temperature") = 0.5,
        py::arg("renormalize_positive") = false,
        "Loss and its gradient with respect to the queries, per class.");

    m.def(
        "relation_graph",
        [](const std::map<int, Vector>& means, std::size_t num_classes) {
            std::vector<ClassMean> list;
            for (const auto& [c, v] : means) list.push_back(ClassMean{c, v, 1});
            return relation_graph(list, num_classes).g;
        },
        py::arg("means"), py::arg("num_classes"));

    m.def(
        "negative_class_distribution",
        [](const std::map<int, Vector>& means, std::size_t num_classes, int c) {
            std::vector<ClassMean> list;
            for (const auto& [k, v] : means) list.push_back(ClassMean{k, v, 1});
            const auto d = negative_class_distribution(relation_graph(list, num_classes), c);
            return py::make_tuple(d.classes, d.probabilities);
        },
        py::arg("means"), py::arg("num_classes"), py::arg("c"));

    m.def(
        "split_easy_hard",
        [](const std::vector<double>& confidences, double strong_threshold) {
            const auto s = split_easy_hard(confidences, strong_threshold);
            return py::make_tuple(s.easy, s.hard);
        },
        py::arg("confidences"), py::arg("strong_threshold") = 0.97);

    m.def("poly_learning_rate",
          [](int iter, int total_iters, double base_lr, double power) {
              OptimConfig cfg;
              cfg.base_lr = base_lr;
              cfg.power = power;
              cfg.total_iters = total_iters;
              return poly_learning_rate(iter, cfg);
          },
          py::arg("iter"), py::arg("total_iters"), py::arg("base_lr") = 2.5e-3, py::arg("power") = 0.9);

    m.def(
        "generate_synthetic",
        [](std::uint64_t seed, std::size_t height, std::size_t width, int num_classes, std::size_t train_count,
           std::size_t val_count) {
            SynthSpec s;
            s.seed = seed;
            s.height = height;
            s.width = width;
            s.num_classes = num_classes;
            s.train_count = train_count;
            s.val_count = val_count;
            const auto d = generate_synthetic(s);
            py::dict out;
            out["train"] = dataset_to(d.train);
            out["val"] = dataset_to(d.val);
            return out;
        },
        py::arg("seed") = 0, py::arg("height") = 64, py::arg("width") = 64, py::arg("num_classes") = 4,
        py::arg("train_count") = 100, py::arg("val_count") = 20);

    m.def(
        "partition_pdfl",
        [](const U8Array& labels, int num_classes, int min_images_per_class, int min_distinct_classes, std::uint64_t seed) {
            if (labels.ndim() != 3) throw py::value_error("labels must be N x H x W");
            std::vector<LabelMap> maps;
            const auto n = static_cast<std::size_t>(labels.shape(0));
            const auto h = static_cast<std::size_t>(labels.shape(1));
            const auto w = static_cast<std::size_t>(labels.shape(2));
            for (std::size_t i = 0; i < n; ++i) {
                LabelMap mm(h, w);
                std::copy_n(labels.data() + i * h * w, h * w, mm.values.begin());
                maps.push_back(std::move(mm));
            }
            Rng rng(seed);
            const auto r = partition_pdfl(maps, num_classes, PdflSpec{min_images_per_class, min_distinct_classes}, rng);
            return py::make_tuple(r.labelled, r.unlabelled);
        },
        py::arg("labels"), py::arg("num_classes"), py::arg("min_images_per_class") = 5,
        py::arg("min_distinct_classes") = 2, py::arg("seed") = 0);

    m.def(
        "partition_plfd",
        [](const U8Array& label, const py::object& budget, std::uint64_t seed) {
            const LabelBudget b = py::isinstance<py::str>(budget) ? LabelBudget::one_pixel()
                                                                   : LabelBudget::of_fraction(budget.cast<double>());
            if (py::isinstance<py::str>(budget) && budget.cast<std::string>() != "one_pixel")
                throw py::value_error("budget must be 'one_pixel' or a fraction");
            Rng rng(seed);
            const auto r = partition_plfd(label_from(label), b, rng);
            U8Array out({r.partial.height, r.partial.width});
            std::copy(r.partial.values.begin(), r.partial.values.end(), out.mutable_data());
            return out;
        },
        py::arg("label"), py::arg("budget") = "one_pixel", py::arg("seed") = 0);

    m.def(
        "mean_iou",
        [](const U8Array& truth, const U8Array& prediction, int num_classes) {
            if (truth.size() != prediction.size()) throw py::value_error("truth and prediction sizes differ");
            ConfusionMatrix cm(num_classes);
            cm.add(std::span<const Label>(truth.data(), static_cast<std::size_t>(truth.size())),
                   std::span<const Label>(prediction.data(), static_cast<std::size_t>(prediction.size())));
            const auto r = mean_iou(cm);
            return py::make_tuple(r.per_class, r.mean);
        },
        py::arg("truth"), py::arg("prediction"), py::arg("num_classes"));

    m.def(
        "dendrogram",
        [](const std::map<int, Vector>& means) {
            std::vector<ClassMean> list;
            for (const auto& [c, v] : means) list.push_back(ClassMean{c, v, 1});
            const auto d = dendrogram(list);
            py::list merges;
            for (const auto& mg : d.merges) merges.append(py::make_tuple(mg.members, mg.height));
            return py::make_tuple(to_newick(d), merges);
        },
        py::arg("means"), "Average-linkage cosine dendrogram: (newick, [(members, height), ...]).");

    m.def(
        "run_cli",
        [](const std::string& command, const std::string& config, bool relate, bool timestamp) {
            cli::Options opts;
            opts.config = config;
            opts.relate = relate;
            opts.timestamp = timestamp;
            std::ostringstream out, err;
            const int code = cli::run(command, opts, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("command"), py::arg("config"), py::arg("relate") = false, py::arg("timestamp") = false,
        "Run a subcommand in-process: (exit_code, stdout, stderr).");
}

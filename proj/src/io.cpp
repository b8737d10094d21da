#include "reco/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace reco {

namespace {

constexpr std::string_view kDatasetFormat = "reco-lab-dataset";
constexpr std::string_view kPartitionFormat = "reco-lab-partition";

std::string sample_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return buf;
}

struct NetpbmHeader {
    std::size_t width = 0, height = 0;
};

NetpbmHeader read_header(std::istream& in, std::string_view magic, const fs::path& path) {
    auto token = [&]() {
        std::string t;
        while (in >> std::ws && in.peek() == '#') {
            std::string comment;
            std::getline(in, comment);
        }
        in >> t;
        return t;
    };
    if (token() != magic) fail(ErrorKind::Data, path.string() + ": expected " + std::string(magic) + " netpbm file");
    NetpbmHeader h;
    try {
        h.width = std::stoul(token());
        h.height = std::stoul(token());
        if (std::stoul(token()) != 255) fail(ErrorKind::Data, path.string() + ": only maxval 255 is supported");
    } catch (const std::logic_error&) {
        fail(ErrorKind::Data, path.string() + ": malformed netpbm header");
    }
    in.get();
    return h;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Data, "cannot open " + path.string());
    return in;
}

void write_bytes(const fs::path& path, std::string_view magic, std::size_t w, std::size_t h,
                 const std::vector<unsigned char>& bytes) {
    std::ostringstream out;
    out << magic << '\n' << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    write_text(path, out.str());
}

std::vector<unsigned char> read_bytes(std::istream& in, std::size_t n, const fs::path& path) {
    std::vector<unsigned char> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) fail(ErrorKind::Data, path.string() + ": truncated pixel data");
    return bytes;
}

Json dataset_split_json(const Dataset& ds, std::string_view split) {
    Json items = Json::array();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto name = sample_name(i);
        items.push_back({{"id", i},
                         {"image", std::string(split) + "/" + name + ".ppm"},
                         {"label", std::string(split) + "/" + name + ".pgm"},
                         {"drawn_classes", ds.drawn_classes[i]}});
    }
    return items;
}

Dataset load_split(const fs::path& dir, const Json& items, int num_classes) {
    Dataset ds;
    ds.num_classes = num_classes;
    for (const auto& item : items) {
        ds.images.push_back(read_ppm(dir / item.at("image").get<std::string>()));
        ds.labels.push_back(read_pgm(dir / item.at("label").get<std::string>()));
        ds.drawn_classes.push_back(item.at("drawn_classes").get<std::vector<int>>());
        for (auto v : ds.labels.back().values)
            require(v < num_classes || v == kIgnoreLabel, ErrorKind::Data,
                    item.at("label").get<std::string>() + " holds label " + std::to_string(v));
    }
    return ds;
}

Json budget_json(const LabelBudget& b) {
    if (b.kind == LabelBudget::Kind::OnePixel) return "one_pixel";
    return b.fraction;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Data, "cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) fail(ErrorKind::Data, "write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const fs::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::Data, path.string() + ": " + e.what());
    }
}

void write_ppm(const fs::path& path, const Image& image) {
    std::vector<unsigned char> bytes(image.values.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image.values[i], 0.0, 1.0) * 255.0));
    write_bytes(path, "P6", image.width, image.height, bytes);
}

Image read_ppm(const fs::path& path) {
    auto in = open_in(path);
    const auto h = read_header(in, "P6", path);
    Image image(h.height, h.width);
    const auto bytes = read_bytes(in, image.values.size(), path);
    for (std::size_t i = 0; i < bytes.size(); ++i) image.values[i] = bytes[i] / 255.0;
    return image;
}

void write_pgm(const fs::path& path, const LabelMap& label) {
    write_bytes(path, "P5", label.width, label.height, std::vector<unsigned char>(label.values.begin(), label.values.end()));
}

LabelMap read_pgm(const fs::path& path) {
    auto in = open_in(path);
    const auto h = read_header(in, "P5", path);
    LabelMap label(h.height, h.width);
    const auto bytes = read_bytes(in, label.values.size(), path);
    std::copy(bytes.begin(), bytes.end(), label.values.begin());
    return label;
}

Json to_json(const SynthSpec& s) {
    return {{"height", s.height},         {"width", s.width},           {"num_classes", s.num_classes},
            {"min_shapes", s.min_shapes}, {"max_shapes", s.max_shapes}, {"train_count", s.train_count},
            {"val_count", s.val_count},   {"noise_std", s.noise_std},   {"color_jitter", s.color_jitter},
            {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const Json& j) {
    SynthSpec s;
    s.height = j.at("height");
    s.width = j.at("width");
    s.num_classes = j.at("num_classes");
    s.min_shapes = j.at("min_shapes");
    s.max_shapes = j.at("max_shapes");
    s.train_count = j.at("train_count");
    s.val_count = j.at("val_count");
    s.noise_std = j.at("noise_std");
    s.color_jitter = j.at("color_jitter");
    s.seed = j.at("seed");
    return s;
}

void save_dataset(const fs::path& dir, const SynthSpec& spec, const SyntheticData& data) {
    fs::create_directories(dir / "train");
    fs::create_directories(dir / "val");
    auto dump = [&](const Dataset& ds, std::string_view split) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto name = sample_name(i);
            write_ppm(dir / split / (name + ".ppm"), ds.images[i]);
            write_pgm(dir / split / (name + ".pgm"), ds.labels[i]);
        }
    };
    dump(data.train, "train");
    dump(data.val, "val");
    Json manifest = {{"format", kDatasetFormat},
                     {"spec", to_json(spec)},
                     {"num_classes", spec.num_classes},
                     {"ignore_label", kIgnoreLabel},
                     {"splits", {{"train", dataset_split_json(data.train, "train")}, {"val", dataset_split_json(data.val, "val")}}}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedDataset load_dataset(const fs::path& dir) {
    const Json manifest = read_json(dir / "manifest.json");
    try {
        require(manifest.at("format") == kDatasetFormat, ErrorKind::Data, "not a dataset manifest");
        LoadedDataset out;
        out.spec = synth_spec_from_json(manifest.at("spec"));
        const int c = manifest.at("num_classes");
        out.data.train = load_split(dir, manifest.at("splits").at("train"), c);
        out.data.val = load_split(dir, manifest.at("splits").at("val"), c);
        return out;
    } catch (const Json::exception& e) {
        fail(ErrorKind::Data, (dir / "manifest.json").string() + ": " + e.what());
    }
}

std::string_view to_string(PartitionMode m) {
    return m == PartitionMode::PartialDatasetFullLabels ? "partial_dataset_full_labels" : "partial_labels_full_dataset";
}

PartitionMode parse_partition_mode(std::string_view s) {
    if (s == "partial_dataset_full_labels") return PartitionMode::PartialDatasetFullLabels;
    if (s == "partial_labels_full_dataset") return PartitionMode::PartialLabelsFullDataset;
    fail(ErrorKind::Config, "unknown partition mode '" + std::string(s) + "'");
}

void PartitionSpec::validate() const {
    if (mode == PartitionMode::PartialDatasetFullLabels) {
        require(pdfl.min_images_per_class >= 1, ErrorKind::Config, "min_images_per_class must be at least 1");
        require(pdfl.min_distinct_classes >= 1, ErrorKind::Config, "min_distinct_classes must be at least 1");
    } else if (budget.kind == LabelBudget::Kind::Fraction) {
        require(budget.fraction > 0.0 && budget.fraction <= 1.0, ErrorKind::Config, "label_budget must be in (0, 1]");
    }
}

PartitionOutcome make_partition(const Dataset& train, const PartitionSpec& spec, Rng rng) {
    spec.validate();
    PartitionOutcome out;
    out.partition.spec = spec;
    out.audit = {{"format", kPartitionFormat}, {"mode", to_string(spec.mode)}};
    if (spec.mode == PartitionMode::PartialDatasetFullLabels) {
        const auto r = partition_pdfl(train.labels, train.num_classes, spec.pdfl, rng);
        out.partition.labelled = r.labelled;
        out.partition.unlabelled = r.unlabelled;
        out.partition.labels = train.labels;
        Json steps = Json::array();
        for (const auto& s : r.audit)
            steps.push_back({{"image", s.image},
                             {"distinct_classes", s.distinct_classes},
                             {"least_sampled", s.least_sampled},
                             {"coverage_before", s.coverage_before}});
        out.audit["min_images_per_class"] = spec.pdfl.min_images_per_class;
        out.audit["min_distinct_classes"] = spec.pdfl.min_distinct_classes;
        out.audit["labelled"] = r.labelled;
        out.audit["unlabelled"] = r.unlabelled;
        out.audit["steps"] = std::move(steps);
        return out;
    }

    out.audit["label_budget"] = budget_json(spec.budget);
    Json images = Json::array();
    for (std::size_t i = 0; i < train.size(); ++i) {
        Rng image_rng = rng.fork({i});
        auto r = partition_plfd(train.labels[i], spec.budget, image_rng);
        Json classes = Json::array();
        for (const auto& a : r.classes) {
            Json seeds = Json::array();
            for (const auto& s : a.seeds) seeds.push_back({{"pixel", s.pixel}, {"step", s.step}});
            classes.push_back({{"class", a.class_id},
                               {"class_pixels", a.class_pixels},
                               {"revealed", a.revealed},
                               {"revealed_before_last_step", a.revealed_before_last_step},
                               {"steps", a.steps},
                               {"seeds", std::move(seeds)}});
        }
        images.push_back({{"id", i}, {"partial", "train_partial/" + sample_name(i) + ".pgm"}, {"classes", std::move(classes)}});
        out.partition.labels.push_back(std::move(r.partial));
        out.partition.labelled.push_back(i);
        out.partition.unlabelled.push_back(i);
    }
    out.audit["labelled"] = out.partition.labelled;
    out.audit["unlabelled"] = out.partition.unlabelled;
    out.audit["images"] = std::move(images);
    return out;
}

void save_partition(const fs::path& dataset_dir, const PartitionOutcome& outcome) {
    if (outcome.partition.spec.mode == PartitionMode::PartialLabelsFullDataset)
        for (std::size_t i = 0; i < outcome.partition.labels.size(); ++i)
            write_pgm(dataset_dir / "train_partial" / (sample_name(i) + ".pgm"), outcome.partition.labels[i]);
    write_text(dataset_dir / "partition.json", outcome.audit.dump(2) + "\n");
}

Partition load_partition(const fs::path& dataset_dir, const Dataset& train) {
    const Json j = read_json(dataset_dir / "partition.json");
    try {
        require(j.at("format") == kPartitionFormat, ErrorKind::Data, "not a partition manifest");
        Partition p;
        p.spec.mode = parse_partition_mode(j.at("mode").get<std::string>());
        p.labelled = j.at("labelled").get<std::vector<std::size_t>>();
        p.unlabelled = j.at("unlabelled").get<std::vector<std::size_t>>();
        for (auto id : p.labelled) require(id < train.size(), ErrorKind::Data, "partition names a missing image");
        for (auto id : p.unlabelled) require(id < train.size(), ErrorKind::Data, "partition names a missing image");
        if (p.spec.mode == PartitionMode::PartialDatasetFullLabels) {
            p.spec.pdfl.min_images_per_class = j.at("min_images_per_class");
            p.spec.pdfl.min_distinct_classes = j.at("min_distinct_classes");
            p.labels = train.labels;
        } else {
            const auto& b = j.at("label_budget");
            p.spec.budget = b.is_string() ? LabelBudget::one_pixel() : LabelBudget::of_fraction(b.get<double>());
            for (const auto& img : j.at("images")) p.labels.push_back(read_pgm(dataset_dir / img.at("partial").get<std::string>()));
            require(p.labels.size() == train.size(), ErrorKind::Data, "partial label count differs from train size");
        }
        return p;
    } catch (const Json::exception& e) {
        fail(ErrorKind::Data, (dataset_dir / "partition.json").string() + ": " + e.what());
    }
}

}  // namespace reco

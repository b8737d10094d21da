#include "reco/config.hpp"

#include <set>

namespace reco {

namespace {

constexpr std::uint64_t kPartitionStream = 0x70617274;

/// Reads keys out of one JSON object and remembers which were consumed, so
/// anything left over can be reported as unknown.
class Section {
public:
    Section(const Json* j, std::string path) : j_(j), path_(std::move(path)) {
        if (j_ != nullptr && !j_->is_object()) fail(ErrorKind::Config, "'" + display() + "' must be an object");
    }

    Section child(const std::string& key) {
        seen_.insert(key);
        if (j_ == nullptr || !j_->contains(key)) return Section(nullptr, qualify(key));
        return Section(&j_->at(key), qualify(key));
    }

    template <class T>
    void get(const std::string& key, T& out) {
        const Json* v = find(key);
        if (v == nullptr) return;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v->is_boolean()) type_error(key, "a boolean");
        } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
            if (!v->is_number_unsigned()) type_error(key, "a non-negative integer");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer()) type_error(key, "an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v->is_number()) type_error(key, "a number");
        } else {
            if (!v->is_string()) type_error(key, "a string");
        }
        out = v->get<T>();
    }

    template <class Parse, class T>
    void get_enum(const std::string& key, T& out, Parse parse) {
        std::string s;
        get(key, s);
        if (find(key) == nullptr) return;
        try {
            out = parse(s);
        } catch (const Error& e) {
            fail(ErrorKind::Config, "key '" + qualify(key) + "': " + e.what());
        }
    }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        if (j_ == nullptr || !j_->contains(key)) return nullptr;
        return &j_->at(key);
    }

    void finish() const {
        if (j_ == nullptr) return;
        for (const auto& [k, v] : j_->items())
            if (!seen_.count(k)) fail(ErrorKind::Config, "unknown key '" + qualify(k) + "'");
    }

    std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string display() const { return path_.empty() ? "<root>" : path_; }
    [[noreturn]] void type_error(const std::string& key, const char* what) const {
        fail(ErrorKind::Config, "key '" + qualify(key) + "' must be " + what);
    }

    const Json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Check>
void validated(const std::string& section, Check check) {
    try {
        check();
    } catch (const Error& e) {
        fail(ErrorKind::Config, "section '" + section + "': " + e.what());
    }
}

}  // namespace

Rng RunConfig::partition_rng() const { return Rng(seed).fork({kPartitionStream}); }

void RunConfig::finalize() {
    data.seed = seed;
    train.seed = seed;
    model.num_classes = data.num_classes;
    validated("data", [&] { data.validate(); });
    validated("partition", [&] { partition.validate(); });
    validated("model", [&] { model.validate(); });
    validated("train", [&] { train.validate(); });
    require(checkpoint_every >= 0, ErrorKind::Config, "key 'train.checkpoint_every' must be non-negative");
    require(eval.split == "train" || eval.split == "val", ErrorKind::Config, "key 'eval.split' must be train or val");
    require(!out_dir.empty(), ErrorKind::Config, "key 'out_dir' must not be empty");
}

RunConfig parse_run_config(const Json& j) {
    RunConfig c;
    Section root(&j, "");
    root.get("seed", c.seed);
    root.get("out_dir", c.out_dir);

    auto data = root.child("data");
    data.get("height", c.data.height);
    data.get("width", c.data.width);
    data.get("num_classes", c.data.num_classes);
    data.get("min_shapes", c.data.min_shapes);
    data.get("max_shapes", c.data.max_shapes);
    data.get("train_count", c.data.train_count);
    data.get("val_count", c.data.val_count);
    data.get("noise_std", c.data.noise_std);
    data.get("color_jitter", c.data.color_jitter);
    data.finish();

    auto part = root.child("partition");
    part.get_enum("mode", c.partition.mode, parse_partition_mode);
    part.get("min_images_per_class", c.partition.pdfl.min_images_per_class);
    part.get("min_distinct_classes", c.partition.pdfl.min_distinct_classes);
    if (const Json* b = part.find("label_budget")) {
        if (b->is_string() && b->get<std::string>() == "one_pixel") {
            c.partition.budget = LabelBudget::one_pixel();
        } else if (b->is_number() && b->get<double>() > 0.0 && b->get<double>() <= 1.0) {
            c.partition.budget = LabelBudget::of_fraction(b->get<double>());
        } else {
            fail(ErrorKind::Config, "key 'partition.label_budget' must be \"one_pixel\" or a fraction in (0, 1]");
        }
    }
    part.finish();

    auto model = root.child("model");
    model.get("embed_dim", c.model.embed_dim);
    model.finish();

    auto loss = root.child("loss");
    loss.get("temperature", c.train.loss.temperature);
    loss.get("num_queries", c.train.loss.num_queries);
    loss.get("num_keys", c.train.loss.num_keys);
    loss.get("strong_threshold", c.train.loss.strong_threshold);
    loss.get("weak_threshold", c.train.loss.weak_threshold);
    loss.get("renormalize_positive", c.train.loss.renormalize_positive);
    loss.finish();

    auto sampler = root.child("sampler");
    sampler.get_enum("strategy", c.train.strategy, parse_sampling_strategy);
    sampler.finish();

    auto optim = root.child("optim");
    optim.get("base_lr", c.train.optim.base_lr);
    optim.get("momentum", c.train.optim.momentum);
    optim.get("weight_decay", c.train.optim.weight_decay);
    optim.get("power", c.train.optim.power);
    optim.get("total_iters", c.train.optim.total_iters);
    optim.finish();

    auto train = root.child("train");
    train.get_enum("mode", c.train.mode, parse_train_mode);
    train.get_enum("augmentation", c.train.augmentation, parse_augmentation);
    train.get("reco", c.train.reco);
    train.get("ema_decay", c.train.ema_decay);
    train.get("labelled_batch", c.train.labelled_batch);
    train.get("unlabelled_batch", c.train.unlabelled_batch);
    train.get("flip", c.train.flip);
    train.get("checkpoint_every", c.checkpoint_every);
    if (train.find("eta_override") != nullptr) {
        double eta = 0.0;
        train.get("eta_override", eta);
        c.train.eta_override = eta;
    }
    train.finish();

    auto eval = root.child("eval");
    eval.get("split", c.eval.split);
    eval.get_enum("embedding", c.eval.embedding, parse_embedding_kind);
    eval.finish();

    root.finish();
    c.finalize();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::Config, path.string() + ": " + e.what());
    } catch (const Error& e) {
        fail(ErrorKind::Config, e.what());
    }
    return parse_run_config(j);
}

Json RunConfig::to_json() const {
    Json budget = partition.budget.kind == LabelBudget::Kind::OnePixel ? Json("one_pixel") : Json(partition.budget.fraction);
    Json train_j = {{"mode", reco::to_string(train.mode)},
                    {"augmentation", reco::to_string(train.augmentation)},
                    {"reco", train.reco},
                    {"ema_decay", train.ema_decay},
                    {"labelled_batch", train.labelled_batch},
                    {"unlabelled_batch", train.unlabelled_batch},
                    {"flip", train.flip},
                    {"checkpoint_every", checkpoint_every}};
    if (train.eta_override) train_j["eta_override"] = *train.eta_override;
    Json data_j = reco::to_json(data);
    data_j.erase("seed");
    return {{"seed", seed},
            {"out_dir", out_dir},
            {"data", std::move(data_j)},
            {"partition",
             {{"mode", reco::to_string(partition.mode)},
              {"min_images_per_class", partition.pdfl.min_images_per_class},
              {"min_distinct_classes", partition.pdfl.min_distinct_classes},
              {"label_budget", budget}}},
            {"model", {{"embed_dim", model.embed_dim}}},
            {"loss",
             {{"temperature", train.loss.temperature},
              {"num_queries", train.loss.num_queries},
              {"num_keys", train.loss.num_keys},
              {"strong_threshold", train.loss.strong_threshold},
              {"weak_threshold", train.loss.weak_threshold},
              {"renormalize_positive", train.loss.renormalize_positive}}},
            {"sampler", {{"strategy", reco::to_string(train.strategy)}}},
            {"optim",
             {{"base_lr", train.optim.base_lr},
              {"momentum", train.optim.momentum},
              {"weight_decay", train.optim.weight_decay},
              {"power", train.optim.power},
              {"total_iters", train.optim.total_iters}}},
            {"train", std::move(train_j)},
            {"eval", {{"split", eval.split}, {"embedding", reco::to_string(eval.embedding)}}}};
}

}  // namespace reco

#include "reco/cli.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "reco/parallel.hpp"

namespace reco::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string timestamp_line() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << "# started " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << '\n';
    return out.str();
}

Json comparable(Json j) {
    j.erase("out_dir");
    j["train"].erase("checkpoint_every");
    return j;
}

/// Keeps the header and the rows for iterations below `until`.
std::string truncate_metrics(const std::string& text, int until) {
    std::istringstream in(text);
    std::string line, kept;
    while (std::getline(in, line)) {
        if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0])) && std::stoi(line) >= until) break;
        kept += line + '\n';
    }
    return kept;
}

std::optional<fs::path> latest_checkpoint(const RunConfig& cfg) {
    if (fs::exists(final_checkpoint_path(cfg))) return final_checkpoint_path(cfg);
    const auto dir = cfg.train_dir() / "checkpoints";
    if (!fs::exists(dir)) return std::nullopt;
    std::optional<fs::path> best;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json" && (!best || e.path().filename() > best->filename())) best = e.path();
    return best;
}

}  // namespace

RunConfig resolve_config(const Options& opts) {
    RunConfig cfg = opts.config.empty() ? RunConfig{} : load_run_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out) cfg.out_dir = *opts.out;
    if (opts.split) cfg.eval.split = *opts.split;
    cfg.finalize();
    return cfg;
}

std::string metrics_header() { return "iter,lr,supervised,unsupervised,eta,reco,total\n"; }

std::string metrics_line(int iter, const StepReport& r) {
    const auto& l = r.losses;
    return std::to_string(iter) + ',' + fmt(r.lr) + ',' + fmt(l.supervised) + ',' + fmt(l.unsupervised) + ',' + fmt(l.eta) +
           ',' + fmt(l.reco) + ',' + fmt(l.total) + '\n';
}

fs::path final_checkpoint_path(const RunConfig& cfg) { return cfg.train_dir() / "checkpoint_final.json"; }

fs::path checkpoint_path(const RunConfig& cfg, int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "iter_%07d.json", iteration);
    return cfg.train_dir() / "checkpoints" / buf;
}

const ToyModelParams& inference_params(const Checkpoint& ckpt) {
    const auto mode = ckpt.config.at("train").at("mode").get<std::string>();
    return parse_train_mode(mode) == TrainMode::SemiSupervised ? ckpt.teacher : ckpt.student;
}

void cmd_generate(const RunConfig& cfg, std::ostream& log) {
    const auto data = generate_synthetic(cfg.data, worker_count());
    save_dataset(cfg.dataset_dir(), cfg.data, data);
    log << "generated " << data.train.size() << " train / " << data.val.size() << " val images in "
        << cfg.dataset_dir().string() << '\n';
}

void cmd_partition(const RunConfig& cfg, std::ostream& log) {
    const auto ds = load_dataset(cfg.dataset_dir());
    const auto outcome = make_partition(ds.data.train, cfg.partition, cfg.partition_rng());
    save_partition(cfg.dataset_dir(), outcome);
    log << to_string(cfg.partition.mode) << ": " << outcome.partition.labelled.size() << " labelled, "
        << outcome.partition.unlabelled.size() << " unlabelled\n";
}

void cmd_train(const RunConfig& cfg, const Options& opts, std::ostream& log) {
    const auto ds = load_dataset(cfg.dataset_dir());
    require(fs::exists(cfg.dataset_dir() / "partition.json"), ErrorKind::Data,
            "no partition.json in " + cfg.dataset_dir().string() + "; run partition first");
    const auto part = load_partition(cfg.dataset_dir(), ds.data.train);
    require(ds.spec.num_classes == cfg.model.num_classes, ErrorKind::Config, "dataset class count differs from config");

    TrainingSet set{ds.data.train.images, part.labels, part.labelled, part.unlabelled};
    Trainer trainer(cfg.model, cfg.train);
    const Json cfg_json = cfg.to_json();
    const fs::path metrics = cfg.train_dir() / "metrics.csv";

    std::string log_text;
    if (opts.resume) {
        const auto path = opts.checkpoint ? std::optional<fs::path>(*opts.checkpoint) : latest_checkpoint(cfg);
        require(path.has_value(), ErrorKind::Data, "--resume: no checkpoint under " + cfg.train_dir().string());
        const auto ckpt = load_checkpoint(*path);
        require(comparable(ckpt.config) == comparable(cfg_json), ErrorKind::Config,
                "--resume: " + path->string() + " was written by a different configuration");
        restore(trainer, ckpt);
        log_text = truncate_metrics(fs::exists(metrics) ? read_text(metrics) : "", ckpt.iteration);
        if (log_text.find(metrics_header()) == std::string::npos)
            log_text = (opts.timestamp ? timestamp_line() : "") + metrics_header();
        log << "resuming from iteration " << ckpt.iteration << " (" << path->string() << ")\n";
    } else {
        log_text = (opts.timestamp ? timestamp_line() : "") + metrics_header();
    }

    const int total = cfg.train.optim.total_iters;
    RunHooks hooks;
    hooks.on_step = [&](int iter, const StepReport& r) {
        require(std::isfinite(r.losses.total), ErrorKind::InvalidArgument,
                "non-finite loss at iteration " + std::to_string(iter));
        log_text += metrics_line(iter, r);
    };
    hooks.on_iteration_end = [&](int completed) {
        if (cfg.checkpoint_every > 0 && completed % cfg.checkpoint_every == 0 && completed < total) {
            write_text(metrics, log_text);
            save_checkpoint(checkpoint_path(cfg, completed), capture(trainer, cfg_json));
        }
        if (completed % 100 == 0) log << "iter " << completed << "/" << total << '\n';
    };
    run_training(trainer, set, total, hooks);
    write_text(metrics, log_text);
    save_checkpoint(final_checkpoint_path(cfg), capture(trainer, cfg_json));
    log << "trained " << total << " iterations; metrics in " << metrics.string() << '\n';
}

IouReport cmd_eval(const RunConfig& cfg, const Options& opts, std::ostream& log) {
    const auto ds = load_dataset(cfg.dataset_dir());
    const fs::path path = opts.checkpoint.value_or(final_checkpoint_path(cfg));
    const auto ckpt = load_checkpoint(path);
    require(ckpt.model.num_classes == ds.spec.num_classes, ErrorKind::Data, "checkpoint and dataset class counts differ");
    const Dataset& split = cfg.eval.split == "train" ? ds.data.train : ds.data.val;
    const auto& params = inference_params(ckpt);

    const auto cm = evaluate_model(params, split, worker_count());
    const auto report = mean_iou(cm);
    const auto dir = cfg.eval_dir();
    write_text(dir / ("iou_" + cfg.eval.split + ".csv"), iou_csv(report));

    Json confusion = Json::array();
    for (int t = 0; t < cm.num_classes(); ++t) {
        Json row = Json::array();
        for (int p = 0; p < cm.num_classes(); ++p) row.push_back(cm.at(t, p));
        confusion.push_back(std::move(row));
    }
    Json per_class = Json::array();
    for (const auto& v : report.per_class) per_class.push_back(v ? Json(*v) : Json(nullptr));
    Json summary = {{"checkpoint", path.string()},
                    {"iteration", ckpt.iteration},
                    {"split", cfg.eval.split},
                    {"miou", report.mean},
                    {"iou", per_class},
                    {"confusion", confusion}};

    if (opts.relate) {
        const auto means = class_embeddings(params, split, cfg.eval.embedding);
        require(means.size() >= 2, ErrorKind::Data, "--relate needs at least two classes present in the split");
        const auto graph = relation_graph(means, static_cast<std::size_t>(ckpt.model.num_classes));
        const auto tree = dendrogram(means);
        write_text(dir / "relation_graph.csv", relation_graph_csv(graph));
        write_text(dir / "relation_graph.dot", relation_graph_dot(graph));
        write_text(dir / "dendrogram.nwk", to_newick(tree) + "\n");
        write_text(dir / "dendrogram.json", to_json(tree).dump(2) + "\n");
        summary["embedding"] = to_string(cfg.eval.embedding);
    }
    write_text(dir / ("report_" + cfg.eval.split + ".json"), summary.dump(2) + "\n");
    log << cfg.eval.split << " mIoU " << fmt(report.mean) << " (" << report.counted << " classes)\n";
    return report;
}

int exit_code(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
            case ErrorKind::Config: return kExitConfig;
            case ErrorKind::Data:
            case ErrorKind::Unsatisfiable: return kExitData;
            default: return kExitRuntime;
        }
    }
    if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kExitData;
    return kExitRuntime;
}

int run(const std::string& command, const Options& opts, std::ostream& out, std::ostream& err) {
    try {
        const RunConfig cfg = resolve_config(opts);
        if (command == "generate") {
            cmd_generate(cfg, out);
        } else if (command == "partition") {
            cmd_partition(cfg, out);
        } else if (command == "train") {
            cmd_train(cfg, opts, out);
        } else if (command == "eval") {
            cmd_eval(cfg, opts, out);
        } else {
            err << "unknown command '" << command << "'\n";
            return kExitConfig;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e);
    }
}

}  // namespace reco::cli

#include "reco/checkpoint.hpp"

namespace reco {

namespace {
constexpr std::string_view kFormat = "reco-lab-checkpoint";
}

Json params_to_json(const ToyModelParams& p) {
    Json out = Json::object();
    p.for_each([&](std::string_view name, const Matrix& m) {
        out[std::string(name)] = {{"rows", m.rows()},
                                  {"cols", m.cols()},
                                  {"data", std::vector<double>(m.data(), m.data() + m.size())}};
    });
    return out;
}

ToyModelParams params_from_json(const Json& j, const ModelConfig& cfg) {
    ToyModelParams p = ToyModelParams::zeros(cfg);
    p.for_each([&](std::string_view name, Matrix& m) {
        const auto key = std::string(name);
        require(j.contains(key), ErrorKind::Data, "checkpoint is missing tensor " + key);
        const auto& t = j.at(key);
        require(t.at("rows").get<Eigen::Index>() == m.rows() && t.at("cols").get<Eigen::Index>() == m.cols(),
                ErrorKind::ShapeMismatch, "tensor " + key + " has the wrong shape for this model");
        const auto data = t.at("data").get<std::vector<double>>();
        require(data.size() == static_cast<std::size_t>(m.size()), ErrorKind::Data, "tensor " + key + " has the wrong size");
        std::copy(data.begin(), data.end(), m.data());
    });
    return p;
}

Checkpoint capture(const Trainer& trainer, const Json& config) {
    Checkpoint c;
    c.iteration = trainer.iteration();
    c.model = trainer.student().config();
    c.ema_decay = trainer.teacher().decay;
    c.rng = Rng(trainer.config().seed).state();
    c.student = trainer.student();
    c.teacher = trainer.teacher().params;
    c.velocity = trainer.optimiser().velocity;
    c.config = config;
    return c;
}

void restore(Trainer& trainer, const Checkpoint& ckpt) {
    require(ckpt.rng.seed == trainer.config().seed, ErrorKind::Config, "checkpoint seed differs from the run seed");
    require(ckpt.ema_decay == trainer.teacher().decay, ErrorKind::Config, "checkpoint ema_decay differs from the run");
    trainer.restore(ckpt.student, ckpt.teacher, ckpt.velocity, ckpt.iteration);
}

Json to_json(const Checkpoint& c) {
    return {{"format", kFormat},
            {"version", kCheckpointVersion},
            {"iteration", c.iteration},
            {"model", {{"num_classes", c.model.num_classes}, {"embed_dim", c.model.embed_dim}}},
            {"ema_decay", c.ema_decay},
            {"rng", {{"seed", c.rng.seed}, {"stream", c.rng.stream}, {"counter", c.rng.counter}}},
            {"config", c.config},
            {"student", params_to_json(c.student)},
            {"teacher", params_to_json(c.teacher)},
            {"velocity", params_to_json(c.velocity)}};
}

Checkpoint checkpoint_from_json(const Json& j) {
    try {
        require(j.at("format") == kFormat, ErrorKind::Data, "not a checkpoint");
        require(j.at("version") == kCheckpointVersion, ErrorKind::Data,
                "unsupported checkpoint version " + j.at("version").dump());
        Checkpoint c;
        c.iteration = j.at("iteration");
        c.model.num_classes = j.at("model").at("num_classes");
        c.model.embed_dim = j.at("model").at("embed_dim");
        c.model.validate();
        c.ema_decay = j.at("ema_decay");
        c.rng.seed = j.at("rng").at("seed");
        c.rng.stream = j.at("rng").at("stream");
        c.rng.counter = j.at("rng").at("counter");
        c.config = j.at("config");
        c.student = params_from_json(j.at("student"), c.model);
        c.teacher = params_from_json(j.at("teacher"), c.model);
        c.velocity = params_from_json(j.at("velocity"), c.model);
        return c;
    } catch (const Json::exception& e) {
        fail(ErrorKind::Data, std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) { write_text(path, to_json(ckpt).dump() + "\n"); }

Checkpoint load_checkpoint(const fs::path& path) { return checkpoint_from_json(read_json(path)); }

}  // namespace reco

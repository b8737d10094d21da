#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "reco/checkpoint.hpp"
#include "reco/config.hpp"

namespace reco::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

struct Options {
    fs::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool relate = false;
    bool timestamp = true;
    bool resume = false;
    /// eval: checkpoint to load (default: the run's final checkpoint).
    std::optional<fs::path> checkpoint;
    /// eval: overrides eval.split.
    std::optional<std::string> split;
};

RunConfig resolve_config(const Options& opts);

void cmd_generate(const RunConfig& cfg, std::ostream& log);
void cmd_partition(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, const Options& opts, std::ostream& log);
IouReport cmd_eval(const RunConfig& cfg, const Options& opts, std::ostream& log);

/// Parameters used for prediction: the teacher for semi-supervised runs,
/// the student otherwise.
const ToyModelParams& inference_params(const Checkpoint& ckpt);

std::string metrics_header();
std::string metrics_line(int iter, const StepReport& r);
fs::path final_checkpoint_path(const RunConfig& cfg);
fs::path checkpoint_path(const RunConfig& cfg, int iteration);

/// Runs a subcommand and maps failures to exit codes, printing the
/// diagnostic to `err`.
int run(const std::string& command, const Options& opts, std::ostream& out, std::ostream& err);
int exit_code(const std::exception& e);

}  // namespace reco::cli

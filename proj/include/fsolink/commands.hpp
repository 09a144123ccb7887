#pragma once

// Subcommand bodies behind the fsolink executable. Each returns the process
// exit status: 0 success, 1 runtime failure, 2 bad input, 3 corrupt model.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fsolink {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

// FSOLINK_LOG = quiet | warn | info | debug; unset means info.
LogLevel log_level_from_env();

struct CommandContext {
    std::ostream* log = nullptr;  // diagnostics; null discards them
    LogLevel level = LogLevel::Info;
    int jobs = 1;
    std::optional<std::uint64_t> seed_override;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitIntegrity = 3;

// Writes <detector>_<csi>.csv per requested combination and manifest.json
// into output.dir. `config_path` may also name a manifest from an earlier run.
int cmd_sweep(const std::string& config_path, const CommandContext& ctx);

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& svg_path, const CommandContext& ctx);

// Trains one detector (a single CSI mode; one grid point for matched
// training) and saves it. An empty or directory `model_path` stores it as
// dnn_<digest>.fsomodel in that directory (output.dir when empty).
int cmd_train(const std::string& config_path, const std::string& model_path, const CommandContext& ctx);

// Evaluates a saved detector over the configured channel for every CSI mode,
// writing detect_<detector>_<csi>.csv and manifest.json into output.dir.
int cmd_detect(const std::string& model_path, const std::string& config_path, const CommandContext& ctx);

}  // namespace fsolink

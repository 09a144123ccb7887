#pragma once

// Experiment description in a flat `key = value` format:
//
//   # 16-QAM, moderate turbulence
//   modulation.order = 16
//   fading.sigma = 0.3
//   fading.correlation_length = 2
//   csi.modes = perfect, imperfect
//   detectors = ml, dnn
//   training = default
//   sweep.esn0_db = 0:2:30
//   seed = 7
//
// Required keys: modulation.order, fading.sigma, sweep.esn0_db, seed.
// `training = default` declares a training section with every default; any
// training.* key declares it too.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsolink/montecarlo.hpp"

namespace fsolink {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ExperimentConfig {
    int order = 16;
    FadingConfig fading;
    std::vector<CsiMode> csi_modes{CsiMode::Perfect};
    double sigma_e = 0.0;  // resolved: defaults to fading.sigma / 2
    int assumed_correlation_length = 1;
    bool run_ml = true;
    bool run_dnn = false;
    std::optional<TrainingHyperparams> training;
    SweepConfig sweep;
    std::string output_dir = "results";
    double dc_bias = kDefaultDcBias;
    std::uint64_t seed = 0;

    [[nodiscard]] LinkConfig link(CsiMode mode) const;

    // Every key with its resolved value, in canonical order. Feeding the
    // rendered text back to parse_config yields an equal config.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> resolved() const;
    [[nodiscard]] std::string to_text() const;

    bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& text);

// Exact decimal form of a double (shortest string that round-trips).
std::string format_double(double v);

}  // namespace fsolink

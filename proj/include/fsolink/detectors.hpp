#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fsolink/link.hpp"
#include "fsolink/neural.hpp"

namespace fsolink {

enum class TrainingSnrPolicy {
    MatchedPerPoint,  // one detector per evaluated Es/N0
    MixedRange,       // one detector, training Es/N0 drawn uniformly from the grid
};

std::string_view to_string(TrainingSnrPolicy p);
TrainingSnrPolicy snr_policy_from_string(std::string_view s);

struct TrainingHyperparams {
    int hidden_layers = 2;
    int neurons_per_layer = 40;
    int iterations = 1000;
    int sample_to_batch_ratio = 4;
    int training_set_size = 100'000;
    double learning_rate = 1e-3;
    TrainingSnrPolicy snr_policy = TrainingSnrPolicy::MatchedPerPoint;

    void validate() const;
    [[nodiscard]] std::vector<int> layer_sizes(int order) const;

    bool operator==(const TrainingHyperparams&) const = default;
};

struct TrainingMeta {
    TrainingHyperparams hyperparams;
    LinkConfig link;
    RealVec training_esn0_db;
    std::uint64_t seed = 0;
    std::string digest;
    RealVec loss_history;  // first-batch loss at step 0, then one entry per Adam step
};

struct TrainedDetector {
    MlpParams params;
    std::array<double, 2> feature_mean{0.0, 0.0};
    std::array<double, 2> feature_std{1.0, 1.0};
    int constellation_order = 0;
    TrainingMeta meta;

    [[nodiscard]] bool trained() const { return !params.weights.empty(); }
};

struct TrainingSet {
    Matrix raw;         // 2 x N equalized samples (Re, Im)
    Matrix features;    // 2 x N standardized
    IndexVec labels;
    OneHotMatrix one_hot;
    std::array<double, 2> feature_mean{};
    std::array<double, 2> feature_std{};
};

// argmin_m |r[k] - h_hat[k] * point_m|^2, lowest m on ties.
IndexVec ml_detect(std::span<const Complex> r, std::span<const double> h_hat, const Constellation& c);

// Simulates the front end at the training Es/N0 (one value for matched
// training, the whole grid for mixed training) and standardizes the
// equalized samples. A value of +inf means noiseless.
TrainingSet build_training_set(const LinkConfig& link, const TrainingHyperparams& hp,
                               std::span<const double> esn0_db, std::uint64_t seed);

TrainedDetector train_dnn(const TrainingSet& data, const TrainingHyperparams& hp, std::uint64_t seed);

// build_training_set followed by train_dnn, with metadata filled in.
TrainedDetector train_detector(const LinkConfig& link, const TrainingHyperparams& hp,
                               std::span<const double> esn0_db, std::uint64_t seed);

IndexVec dnn_detect(const TrainedDetector& d, std::span<const Complex> equalized);

// Digest of everything that determines a trained detector.
std::string training_digest(const LinkConfig& link, const TrainingHyperparams& hp, std::span<const double> esn0_db,
                            std::uint64_t seed);

}  // namespace fsolink

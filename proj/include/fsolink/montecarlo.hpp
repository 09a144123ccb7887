#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "fsolink/detectors.hpp"
#include "fsolink/link.hpp"

namespace fsolink {

struct SweepConfig {
    RealVec esn0_grid_db;
    std::int64_t min_errors = 200;
    std::int64_t max_symbols = 10'000'000;
    std::int64_t frame_length = 10'000;
    std::uint64_t master_seed = 1;

    void validate(int correlation_length) const;

    // 0, 2, ..., 30 dB.
    static RealVec default_grid();

    bool operator==(const SweepConfig&) const = default;
};

struct SerPoint {
    double esn0_db = 0.0;
    std::int64_t errors = 0;
    std::int64_t trials = 0;
    double ser = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;

    // Binomial standard error sqrt(ser (1 - ser) / trials).
    [[nodiscard]] double std_error() const;

    bool operator==(const SerPoint&) const = default;
};

enum class DetectorKind { ML, DNN };
std::string_view to_string(DetectorKind k);
DetectorKind detector_kind_from_string(std::string_view s);

struct SerCurve {
    std::string digest;
    DetectorKind detector = DetectorKind::ML;
    CsiMode csi = CsiMode::Perfect;
    double sigma = 0.0;
    int correlation_length = 1;
    std::vector<SerPoint> points;

    [[nodiscard]] std::string label() const;

    bool operator==(const SerCurve&) const = default;
};

// 95% Wilson score interval (z = 1.96).
std::pair<double, double> wilson_interval(std::int64_t errors, std::int64_t trials);

SerPoint make_ser_point(double esn0_db, std::int64_t errors, std::int64_t trials);

struct DetectorSlot {
    DetectorKind kind = DetectorKind::ML;
    std::shared_ptr<const TrainedDetector> dnn;  // required for DNN slots
};

struct PointResult {
    std::vector<SerPoint> per_detector;  // same order as the slots
    std::uint64_t stream_checksum = 0;   // over every simulated frame
    std::int64_t frames = 0;
};

// Simulates frames until every detector has at least min_errors errors or
// max_symbols symbols have been sent. All detectors see the same frames.
PointResult run_point(double esn0_db, const LinkConfig& link, std::span<const DetectorSlot> detectors,
                      const SweepConfig& sweep, std::uint64_t seed);

SerPoint run_point(double esn0_db, const LinkConfig& link, const DetectorSlot& detector, const SweepConfig& sweep,
                   std::uint64_t seed);

// Seed of grid point `index`: drives symbols, fading, noise and CSI error.
std::uint64_t point_seed(std::uint64_t master_seed, std::size_t index);

// Training seed of a detector: the point seed's for matched training, the
// master seed's for mixed training.
std::uint64_t training_seed(std::uint64_t parent);

// Produces the network detector for a grid point.
using DetectorFactory =
    std::function<std::shared_ptr<const TrainedDetector>(std::size_t index, double esn0_db, std::uint64_t seed)>;

// Trains a fresh detector at each point's Es/N0 on the point's link.
DetectorFactory matched_training_factory(const LinkConfig& link, const TrainingHyperparams& hp);

// Trains one detector on the whole grid, on first use, and reuses it.
DetectorFactory mixed_training_factory(const LinkConfig& link, const TrainingHyperparams& hp, RealVec grid,
                                       std::uint64_t master_seed);

// Always returns the same pre-trained detector.
DetectorFactory fixed_detector_factory(std::shared_ptr<const TrainedDetector> d);

struct SweepResult {
    std::optional<SerCurve> ml;
    std::optional<SerCurve> dnn;
    std::vector<std::uint64_t> stream_checksums;  // per grid point
    std::vector<std::shared_ptr<const TrainedDetector>> detectors;  // per grid point, DNN only
};

// `dnn_factory` may be empty for an ML-only sweep. `jobs` > 1 evaluates grid
// points concurrently; results do not depend on it.
SweepResult run_sweep(const SweepConfig& sweep, const LinkConfig& link, bool include_ml,
                      const DetectorFactory& dnn_factory, int jobs = 1);

}  // namespace fsolink

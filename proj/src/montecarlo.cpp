#include "fsolink/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace fsolink {

void SweepConfig::validate(int correlation_length) const {
    if (esn0_grid_db.empty()) fail_argument("sweep.esn0_db must not be empty");
    for (std::size_t i = 0; i < esn0_grid_db.size(); ++i) {
        if (std::isnan(esn0_grid_db[i])) fail_argument("sweep.esn0_db contains NaN");
        if (i > 0 && !(esn0_grid_db[i] > esn0_grid_db[i - 1])) {
            fail_argument("sweep.esn0_db must be strictly increasing");
        }
    }
    if (min_errors < 1) fail_argument("sweep.min_errors must be >= 1");
    if (max_symbols < 1) fail_argument("sweep.max_symbols must be >= 1");
    if (frame_length < 1) fail_argument("sweep.frame_length must be >= 1");
    if (correlation_length < 1 || frame_length % correlation_length != 0) {
        fail_argument("sweep.frame_length must be a multiple of the correlation length");
    }
}

RealVec SweepConfig::default_grid() {
    RealVec g;
    for (int db = 0; db <= 30; db += 2) g.push_back(db);
    return g;
}

double SerPoint::std_error() const {
    if (trials <= 0) return 0.0;
    return std::sqrt(ser * (1.0 - ser) / static_cast<double>(trials));
}

std::string_view to_string(DetectorKind k) { return k == DetectorKind::ML ? "ML" : "DNN"; }

DetectorKind detector_kind_from_string(std::string_view s) {
    if (s == "ML" || s == "ml") return DetectorKind::ML;
    if (s == "DNN" || s == "dnn") return DetectorKind::DNN;
    fail_argument("unknown detector '" + std::string(s) + "' (expected ml or dnn)");
}

std::string SerCurve::label() const {
    std::ostringstream s;
    s << to_string(detector) << ' ' << to_string(csi) << " CSI, sigma=" << sigma << ", L=" << correlation_length;
    return s.str();
}

std::pair<double, double> wilson_interval(std::int64_t errors, std::int64_t trials) {
    if (trials < 1) fail_argument("wilson_interval: trials must be >= 1");
    if (errors < 0 || errors > trials) fail_argument("wilson_interval: errors must lie in [0, trials]");
    constexpr double z = 1.96;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2n = z * z / n;
    const double center = (p + z2n / 2.0) / (1.0 + z2n);
    const double half = z / (1.0 + z2n) * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n));
    double low = errors == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
    double high = errors == trials ? 1.0 : std::clamp(center + half, p, 1.0);
    return {low, high};
}

SerPoint make_ser_point(double esn0_db, std::int64_t errors, std::int64_t trials) {
    SerPoint pt;
    pt.esn0_db = esn0_db;
    pt.errors = errors;
    pt.trials = trials;
    pt.ser = static_cast<double>(errors) / static_cast<double>(trials);
    std::tie(pt.ci_low, pt.ci_high) = wilson_interval(errors, trials);
    return pt;
}

PointResult run_point(double esn0_db, const LinkConfig& link, std::span<const DetectorSlot> detectors,
                      const SweepConfig& sweep, std::uint64_t seed) {
    if (detectors.empty()) fail_argument("run_point: no detectors");
    sweep.validate(link.fading.correlation_length);
    for (const auto& d : detectors) {
        if (d.kind == DetectorKind::DNN) {
            if (!d.dnn || !d.dnn->trained()) throw InvalidState("run_point: network detector has not been trained");
            if (d.dnn->constellation_order != link.order) {
                fail_argument("run_point: detector was trained for a different constellation order");
            }
        }
    }

    LinkSimulator sim(link, seed);
    const double n0 = std::isinf(esn0_db) && esn0_db > 0 ? 0.0 : noise_variance(esn0_db);
    std::vector<std::int64_t> errors(detectors.size(), 0);
    std::int64_t trials = 0;
    Fnv1a checksum;
    PointResult res;

    auto done = [&] {
        if (trials >= sweep.max_symbols) return true;
        return std::all_of(errors.begin(), errors.end(), [&](std::int64_t e) { return e >= sweep.min_errors; });
    };

    while (!done()) {
        const auto n = static_cast<std::size_t>(std::min(sweep.frame_length, sweep.max_symbols - trials));
        const ReceivedFrame frame = sim.next_frame(n, n0);
        checksum.update_value(frame.checksum());
        for (std::size_t d = 0; d < detectors.size(); ++d) {
            const IndexVec decided = detectors[d].kind == DetectorKind::ML
                                         ? ml_detect(frame.r, frame.h_hat, sim.constellation())
                                         : dnn_detect(*detectors[d].dnn, frame.equalized);
            for (std::size_t k = 0; k < n; ++k) errors[d] += decided[k] != frame.indices[k] ? 1 : 0;
        }
        trials += static_cast<std::int64_t>(n);
        ++res.frames;
    }

    for (const auto e : errors) res.per_detector.push_back(make_ser_point(esn0_db, e, trials));
    res.stream_checksum = checksum.value();
    return res;
}

SerPoint run_point(double esn0_db, const LinkConfig& link, const DetectorSlot& detector, const SweepConfig& sweep,
                   std::uint64_t seed) {
    return run_point(esn0_db, link, std::span<const DetectorSlot>(&detector, 1), sweep, seed).per_detector.front();
}

std::uint64_t point_seed(std::uint64_t master_seed, std::size_t index) { return derive_seed(master_seed, index); }

std::uint64_t training_seed(std::uint64_t parent) {
    constexpr std::uint64_t kTrainingSeedTag = 0x7472'6169'6e00ULL;  // "train"
    return derive_seed(parent, kTrainingSeedTag);
}

DetectorFactory matched_training_factory(const LinkConfig& link, const TrainingHyperparams& hp) {
    return [link, hp](std::size_t, double esn0_db, std::uint64_t seed) {
        const double grid[] = {esn0_db};
        return std::make_shared<const TrainedDetector>(
            train_detector(link, hp, grid, training_seed(seed)));
    };
}

DetectorFactory mixed_training_factory(const LinkConfig& link, const TrainingHyperparams& hp, RealVec grid,
                                       std::uint64_t master_seed) {
    struct Shared {
        std::once_flag once;
        std::shared_ptr<const TrainedDetector> detector;
    };
    auto shared = std::make_shared<Shared>();
    return [shared, link, hp, grid = std::move(grid), master_seed](std::size_t, double, std::uint64_t) {
        std::call_once(shared->once, [&] {
            shared->detector = std::make_shared<const TrainedDetector>(
                train_detector(link, hp, grid, training_seed(master_seed)));
        });
        return shared->detector;
    };
}

DetectorFactory fixed_detector_factory(std::shared_ptr<const TrainedDetector> d) {
    return [d = std::move(d)](std::size_t, double, std::uint64_t) { return d; };
}

SweepResult run_sweep(const SweepConfig& sweep, const LinkConfig& link, bool include_ml,
                      const DetectorFactory& dnn_factory, int jobs) {
    link.validate();
    sweep.validate(link.fading.correlation_length);
    if (!include_ml && !dnn_factory) fail_argument("run_sweep: no detector requested");

    const std::size_t n_points = sweep.esn0_grid_db.size();
    std::vector<PointResult> results(n_points);
    std::vector<std::shared_ptr<const TrainedDetector>> detectors(n_points);

    auto evaluate = [&](std::size_t i) {
        const double esn0 = sweep.esn0_grid_db[i];
        const std::uint64_t seed = point_seed(sweep.master_seed, i);
        std::vector<DetectorSlot> slots;
        if (include_ml) slots.push_back({DetectorKind::ML, nullptr});
        if (dnn_factory) {
            detectors[i] = dnn_factory(i, esn0, seed);
            slots.push_back({DetectorKind::DNN, detectors[i]});
        }
        results[i] = run_point(esn0, link, slots, sweep, seed);
    };

    const auto workers = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(n_points)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_points; ++i) evaluate(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n_points; i = next++) {
                    try {
                        evaluate(i);
                    } catch (...) {
                        const std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::ostringstream key;
    key.precision(17);
    key << "order=" << link.order << ";sigma=" << link.fading.sigma << ";L=" << link.fading.correlation_length
        << ";csi=" << to_string(link.csi.mode) << ";sigma_e=" << link.csi.sigma_e
        << ";assumed_L=" << link.csi.assumed_correlation_length << ";bias=" << link.dc_bias
        << ";min_errors=" << sweep.min_errors << ";max_symbols=" << sweep.max_symbols
        << ";frame=" << sweep.frame_length << ";seed=" << sweep.master_seed << ";grid=";
    for (const double e : sweep.esn0_grid_db) key << e << ',';
    Fnv1a f;
    f.update(key.str());

    SweepResult out;
    auto make_curve = [&](DetectorKind kind, std::size_t slot) {
        SerCurve c;
        c.digest = to_hex(f.value());
        c.detector = kind;
        c.csi = link.csi.mode;
        c.sigma = link.fading.sigma;
        c.correlation_length = link.fading.correlation_length;
        for (const auto& r : results) c.points.push_back(r.per_detector[slot]);
        return c;
    };
    std::size_t slot = 0;
    if (include_ml) out.ml = make_curve(DetectorKind::ML, slot++);
    if (dnn_factory) out.dnn = make_curve(DetectorKind::DNN, slot);
    for (const auto& r : results) out.stream_checksums.push_back(r.stream_checksum);
    if (dnn_factory) out.detectors = std::move(detectors);
    return out;
}

}  // namespace fsolink

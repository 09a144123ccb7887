#include "fsolink/detectors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fsolink/kernels.hpp"

namespace fsolink {

std::string_view to_string(TrainingSnrPolicy p) {
    return p == TrainingSnrPolicy::MatchedPerPoint ? "matched" : "mixed";
}

TrainingSnrPolicy snr_policy_from_string(std::string_view s) {
    if (s == "matched") return TrainingSnrPolicy::MatchedPerPoint;
    if (s == "mixed") return TrainingSnrPolicy::MixedRange;
    fail_argument("unknown training SNR policy '" + std::string(s) + "' (expected matched or mixed)");
}

void TrainingHyperparams::validate() const {
    if (hidden_layers < 1) fail_argument("training.hidden_layers must be >= 1");
    if (neurons_per_layer < 1) fail_argument("training.neurons_per_layer must be >= 1");
    if (iterations < 1) fail_argument("training.iterations must be >= 1");
    if (sample_to_batch_ratio < 1) fail_argument("training.sample_to_batch_ratio must be >= 1");
    if (training_set_size < 1) fail_argument("training.set_size must be >= 1");
    if (training_set_size % sample_to_batch_ratio != 0) {
        fail_argument("training.set_size must be divisible by training.sample_to_batch_ratio");
    }
    if (!std::isfinite(learning_rate) || learning_rate <= 0.0) fail_argument("training.learning_rate must be positive");
}

std::vector<int> TrainingHyperparams::layer_sizes(int order) const {
    std::vector<int> sizes{2};
    for (int i = 0; i < hidden_layers; ++i) sizes.push_back(neurons_per_layer);
    sizes.push_back(order);
    return sizes;
}

IndexVec ml_detect(std::span<const Complex> r, std::span<const double> h_hat, const Constellation& c) {
    if (r.size() != h_hat.size()) fail_argument("ml_detect: length mismatch");
    for (const double g : h_hat) {
        if (!(g > 0.0)) fail_argument("ml_detect: channel estimate must be positive");
    }
    const std::size_t n = r.size();
    RealVec re(n), im(n), pre(c.points.size()), pim(c.points.size());
    for (std::size_t k = 0; k < n; ++k) {
        re[k] = r[k].real();
        im[k] = r[k].imag();
    }
    for (std::size_t m = 0; m < c.points.size(); ++m) {
        pre[m] = c.points[m].real();
        pim[m] = c.points[m].imag();
    }
    IndexVec out(n);
    kernels::active().nearest_point(re.data(), im.data(), h_hat.data(), pre.data(), pim.data(), c.points.size(), n,
                                    out.data());
    return out;
}

TrainingSet build_training_set(const LinkConfig& link, const TrainingHyperparams& hp,
                               std::span<const double> esn0_db, std::uint64_t seed) {
    hp.validate();
    link.validate();
    if (esn0_db.empty()) fail_argument("build_training_set: no training Es/N0");
    const auto n = static_cast<std::size_t>(hp.training_set_size);

    RealVec n0(esn0_db.size() == 1 ? 1 : n);
    if (esn0_db.size() == 1) {
        n0[0] = std::isinf(esn0_db[0]) && esn0_db[0] > 0 ? 0.0 : noise_variance(esn0_db[0]);
    } else {
        RandomStream pick = RandomStream(seed).child(StreamId::TrainingSnr);
        for (auto& v : n0) {
            const double e = esn0_db[static_cast<std::size_t>(pick.uniform_index(static_cast<std::int32_t>(esn0_db.size())))];
            v = std::isinf(e) && e > 0 ? 0.0 : noise_variance(e);
        }
    }

    LinkSimulator sim(link, RandomStream(seed).child(StreamId::Training).seed());
    const ReceivedFrame frame = sim.next_frame(n, n0);

    TrainingSet ts;
    ts.raw = Matrix(2, n);
    for (std::size_t k = 0; k < n; ++k) {
        ts.raw(0, k) = frame.equalized[k].real();
        ts.raw(1, k) = frame.equalized[k].imag();
    }
    ts.features = Matrix(2, n);
    for (std::size_t f = 0; f < 2; ++f) {
        double mean = 0.0;
        for (std::size_t k = 0; k < n; ++k) mean += ts.raw(f, k);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t k = 0; k < n; ++k) var += (ts.raw(f, k) - mean) * (ts.raw(f, k) - mean);
        double sd = std::sqrt(var / static_cast<double>(n));
        if (!(sd > 0.0)) sd = 1.0;
        ts.feature_mean[f] = mean;
        ts.feature_std[f] = sd;
        for (std::size_t k = 0; k < n; ++k) ts.features(f, k) = (ts.raw(f, k) - mean) / sd;
    }
    ts.labels = frame.indices;
    ts.one_hot = encode_one_hot(ts.labels, link.order);
    return ts;
}

namespace {

struct Batch {
    Matrix x;
    OneHotMatrix y;
};

std::vector<Batch> split_batches(const TrainingSet& data, int count) {
    const std::size_t n = data.features.cols();
    const std::size_t size = n / static_cast<std::size_t>(count);
    std::vector<Batch> out;
    for (int j = 0; j < count; ++j) {
        const std::size_t start = static_cast<std::size_t>(j) * size;
        Batch b{Matrix(2, size), OneHotMatrix(size, data.one_hot.cols())};
        for (std::size_t f = 0; f < 2; ++f) {
            for (std::size_t k = 0; k < size; ++k) b.x(f, k) = data.features(f, start + k);
        }
        for (std::size_t k = 0; k < size; ++k) {
            for (std::size_t c = 0; c < data.one_hot.cols(); ++c) b.y.at(k, c) = data.one_hot.at(start + k, c);
        }
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace

TrainedDetector train_dnn(const TrainingSet& data, const TrainingHyperparams& hp, std::uint64_t seed) {
    hp.validate();
    const std::size_t n = data.features.cols();
    if (data.features.rows() != 2 || data.one_hot.rows() != n || data.labels.size() != n) {
        fail_argument("train_dnn: feature and label counts differ");
    }
    if (n == 0 || n % static_cast<std::size_t>(hp.sample_to_batch_ratio) != 0) {
        fail_argument("train_dnn: sample count must be divisible by sample_to_batch_ratio");
    }
    const int order = static_cast<int>(data.one_hot.cols());

    RandomStream init = RandomStream(seed).child(StreamId::Init);
    TrainedDetector det;
    det.params = init_params(hp.layer_sizes(order), init);
    det.feature_mean = data.feature_mean;
    det.feature_std = data.feature_std;
    det.constellation_order = order;
    det.meta.hyperparams = hp;
    det.meta.seed = seed;

    const std::vector<Batch> batches = split_batches(data, hp.sample_to_batch_ratio);
    AdamState adam = make_adam_state(det.params, hp.learning_rate);
    det.meta.loss_history.reserve(static_cast<std::size_t>(hp.iterations) + 1);

    ForwardCache cache;
    Matrix probs;
    Gradients g = det.params.zeros_like();
    BackwardWorkspace ws;
    for (int it = 0; it < hp.iterations; ++it) {
        const Batch& b = batches[static_cast<std::size_t>(it % hp.sample_to_batch_ratio)];
        forward(det.params, b.x, cache);
        softmax(cache.pre.back(), probs);
        det.meta.loss_history.push_back(cross_entropy(probs, b.y));
        backward(det.params, cache, probs, b.y, g, ws);
        adam_step_inplace(det.params, g, adam);
    }
    det.meta.loss_history.push_back(cross_entropy(softmax(predict_logits(det.params, batches[0].x)), batches[0].y));
    return det;
}

TrainedDetector train_detector(const LinkConfig& link, const TrainingHyperparams& hp,
                               std::span<const double> esn0_db, std::uint64_t seed) {
    const TrainingSet ts = build_training_set(link, hp, esn0_db, seed);
    TrainedDetector d = train_dnn(ts, hp, seed);
    d.meta.link = link;
    d.meta.training_esn0_db.assign(esn0_db.begin(), esn0_db.end());
    d.meta.digest = training_digest(link, hp, esn0_db, seed);
    return d;
}

IndexVec dnn_detect(const TrainedDetector& d, std::span<const Complex> equalized) {
    if (!d.trained()) throw InvalidState("dnn_detect: detector has not been trained");
    if (d.params.layer_sizes.back() != d.constellation_order) {
        fail_argument("dnn_detect: network output size does not match the constellation order");
    }
    const std::size_t n = equalized.size();
    Matrix x(2, n);
    for (std::size_t k = 0; k < n; ++k) {
        x(0, k) = (equalized[k].real() - d.feature_mean[0]) / d.feature_std[0];
        x(1, k) = (equalized[k].imag() - d.feature_mean[1]) / d.feature_std[1];
    }
    return argmax_columns(predict_logits(d.params, x));
}

std::string training_digest(const LinkConfig& link, const TrainingHyperparams& hp, std::span<const double> esn0_db,
                            std::uint64_t seed) {
    std::ostringstream s;
    s.precision(17);
    s << "order=" << link.order << ";sigma=" << link.fading.sigma << ";L=" << link.fading.correlation_length
      << ";csi=" << to_string(link.csi.mode);
    if (link.csi.mode == CsiMode::Imperfect) {
        s << ";sigma_e=" << link.csi.sigma_e << ";assumed_L=" << link.csi.assumed_correlation_length;
    }
    s << ";bias=" << link.dc_bias << ";hidden=" << hp.hidden_layers << ";neurons=" << hp.neurons_per_layer
      << ";iterations=" << hp.iterations << ";ratio=" << hp.sample_to_batch_ratio << ";set=" << hp.training_set_size
      << ";lr=" << hp.learning_rate << ";policy=" << to_string(hp.snr_policy) << ";esn0=";
    for (const double e : esn0_db) s << e << ',';
    s << ";seed=" << seed;
    Fnv1a f;
    f.update(s.str());
    return to_hex(f.value());
}

}  // namespace fsolink

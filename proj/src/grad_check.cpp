// Finite-difference gradient oracle. Deliberately shares nothing with the
// kernel path: the loss is re-evaluated with plain loops in long double.

#include <algorithm>
#include <cmath>

#include "fsolink/neural.hpp"

namespace fsolink {
namespace {

using Ld = long double;

struct LdLayer {
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::vector<Ld> w;  // n_out x n_in
    std::vector<Ld> b;
};

// Per layer: pre-activations, n_out x K.
using Trace = std::vector<std::vector<Ld>>;

class ReferenceNet {
public:
    ReferenceNet(const MlpParams& p, const Matrix& x, const OneHotMatrix& one_hot)
        : batch_(x.cols()), input_(x.values().begin(), x.values().end()) {
        for (std::size_t l = 0; l < p.num_layers(); ++l) {
            LdLayer layer;
            layer.n_in = p.weights[l].cols();
            layer.n_out = p.weights[l].rows();
            layer.w.assign(p.weights[l].values().begin(), p.weights[l].values().end());
            layer.b.assign(p.biases[l].begin(), p.biases[l].end());
            layers_.push_back(std::move(layer));
        }
        labels_.resize(batch_);
        for (std::size_t k = 0; k < batch_; ++k) {
            for (std::size_t c = 0; c < one_hot.cols(); ++c) {
                if (one_hot.at(k, c) != 0) labels_[k] = c;
            }
        }
        base_ = trace_from(0, {});
    }

    [[nodiscard]] std::size_t num_layers() const { return layers_.size(); }
    [[nodiscard]] const LdLayer& layer(std::size_t l) const { return layers_[l]; }

    // Loss with W[l](o, i) (or b[l](o) when i == n_in) shifted by `shift`.
    // Sets `kink` when any hidden unit changes its ReLU state.
    Ld shifted_loss(std::size_t l, std::size_t o, std::size_t i, Ld shift, bool& kink) const {
        const LdLayer& layer = layers_[l];
        std::vector<Ld> z = base_[l];
        for (std::size_t k = 0; k < batch_; ++k) {
            const Ld x = i == layer.n_in ? 1.0L : input_of(l, i, k);
            z[o * batch_ + k] += shift * x;
        }
        Trace t = trace_from(l + 1, std::move(z));
        for (std::size_t h = l; h + 1 < layers_.size(); ++h) {
            for (std::size_t j = 0; j < t[h].size(); ++j) {
                if ((t[h][j] > 0) != (base_[h][j] > 0)) kink = true;
            }
        }
        return loss(t.back());
    }

private:
    [[nodiscard]] Ld input_of(std::size_t l, std::size_t i, std::size_t k) const {
        if (l == 0) return input_[i * batch_ + k];
        const Ld z = base_[l - 1][i * batch_ + k];
        return z > 0 ? z : 0.0L;
    }

    // Recomputes layers first..end. When first > 0, `seed` holds the
    // pre-activation of layer first-1 and earlier layers come from base_.
    [[nodiscard]] Trace trace_from(std::size_t first, std::vector<Ld> seed) const {
        Trace t(layers_.size());
        for (std::size_t l = 0; l + 1 < first; ++l) t[l] = base_[l];
        if (first > 0) t[first - 1] = std::move(seed);
        std::vector<Ld> in;
        for (std::size_t l = first; l < layers_.size(); ++l) {
            const LdLayer& layer = layers_[l];
            if (l == 0) {
                in = input_;
            } else {
                in = t[l - 1];
                for (auto& v : in) v = v > 0 ? v : 0.0L;
            }
            t[l].assign(layer.n_out * batch_, 0.0L);
            for (std::size_t o = 0; o < layer.n_out; ++o) {
                Ld* out = t[l].data() + o * batch_;
                for (std::size_t k = 0; k < batch_; ++k) out[k] = layer.b[o];
                for (std::size_t i = 0; i < layer.n_in; ++i) {
                    const Ld w = layer.w[o * layer.n_in + i];
                    const Ld* src = in.data() + i * batch_;
                    for (std::size_t k = 0; k < batch_; ++k) out[k] += w * src[k];
                }
            }
        }
        return t;
    }

    [[nodiscard]] Ld loss(const std::vector<Ld>& logits) const {
        const std::size_t classes = layers_.back().n_out;
        const Ld floor = std::log(static_cast<Ld>(kLogClamp));
        Ld total = 0.0L;
        for (std::size_t k = 0; k < batch_; ++k) {
            Ld mx = logits[k];
            for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, logits[c * batch_ + k]);
            Ld sum = 0.0L;
            for (std::size_t c = 0; c < classes; ++c) sum += std::exp(logits[c * batch_ + k] - mx);
            const Ld log_p = logits[labels_[k] * batch_ + k] - mx - std::log(sum);
            total += std::max(log_p, floor);
        }
        return -total / static_cast<Ld>(batch_);
    }

    std::size_t batch_;
    std::vector<Ld> input_;
    std::vector<LdLayer> layers_;
    std::vector<std::size_t> labels_;
    Trace base_;
};

}  // namespace

GradCheckReport grad_check_against(const MlpParams& p, const Matrix& x, const OneHotMatrix& one_hot,
                                   const Gradients& analytic, double step) {
    if (!p.same_shape(analytic)) fail_argument("grad_check: gradient shape differs from parameters");
    if (!(step > 0.0)) fail_argument("grad_check: step must be positive");
    if (x.rows() != 2 || one_hot.rows() != x.cols() ||
        one_hot.cols() != static_cast<std::size_t>(p.layer_sizes.back())) {
        fail_argument("grad_check: batch shape does not match the network");
    }
    const ReferenceNet net(p, x, one_hot);
    const Ld h = step;
    GradCheckReport report;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const LdLayer& layer = net.layer(l);
        for (std::size_t o = 0; o < layer.n_out; ++o) {
            for (std::size_t i = 0; i <= layer.n_in; ++i) {
                bool kink = false;
                const Ld up = net.shifted_loss(l, o, i, h, kink);
                const Ld down = net.shifted_loss(l, o, i, -h, kink);
                if (kink) {
                    ++report.skipped_at_kinks;
                    continue;
                }
                const double fd = static_cast<double>((up - down) / (2.0L * h));
                const double ga = i == layer.n_in ? analytic.biases[l][o] : analytic.weights[l](o, i);
                const double denom = std::max({std::abs(ga), std::abs(fd), 1e-10});
                report.max_relative_error = std::max(report.max_relative_error, std::abs(ga - fd) / denom);
                ++report.checked;
            }
        }
    }
    return report;
}

double grad_check(const MlpParams& p, const Matrix& x, const OneHotMatrix& one_hot, double step) {
    const ForwardResult fwd = forward(p, x);
    const Matrix probs = softmax(fwd.logits);
    const Gradients g = backward(p, fwd.cache, probs, one_hot);
    return grad_check_against(p, x, one_hot, g, step).max_relative_error;
}

}  // namespace fsolink

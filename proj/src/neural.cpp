#include "fsolink/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsolink/kernels.hpp"

namespace fsolink {

std::size_t MlpParams::num_parameters() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

MlpParams MlpParams::zeros_like() const {
    MlpParams z;
    z.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        z.weights.emplace_back(weights[l].rows(), weights[l].cols(), 0.0);
        z.biases.emplace_back(biases[l].size(), 0.0);
    }
    return z;
}

bool MlpParams::same_shape(const MlpParams& other) const {
    if (layer_sizes != other.layer_sizes || weights.size() != other.weights.size() ||
        biases.size() != other.biases.size()) {
        return false;
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols() ||
            biases[l].size() != other.biases[l].size()) {
            return false;
        }
    }
    return true;
}

std::uint64_t MlpParams::fingerprint() const {
    Fnv1a h;
    for (const int s : layer_sizes) h.update_value(s);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        h.update(weights[l].data(), weights[l].size() * sizeof(double));
        h.update(biases[l].data(), biases[l].size() * sizeof(double));
    }
    return h.value();
}

namespace {

void check_layer_sizes(std::span<const int> sizes) {
    if (sizes.size() < 3) fail_argument("layer sizes need an input, at least one hidden layer and an output");
    if (sizes.front() != 2) fail_argument("the input layer must have 2 neurons");
    for (const int s : sizes) {
        if (s < 1) fail_argument("layer sizes must be positive");
    }
    if (sizes.back() < 2) fail_argument("the output layer needs at least 2 classes");
}

void check_params(const MlpParams& p) {
    check_layer_sizes(p.layer_sizes);
    if (p.weights.size() != p.layer_sizes.size() - 1 || p.biases.size() != p.weights.size()) {
        fail_argument("parameter list does not match layer sizes");
    }
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const auto out = static_cast<std::size_t>(p.layer_sizes[l + 1]);
        const auto in = static_cast<std::size_t>(p.layer_sizes[l]);
        if (p.weights[l].rows() != out || p.weights[l].cols() != in || p.biases[l].size() != out) {
            fail_argument("layer " + std::to_string(l) + " has the wrong shape");
        }
    }
}

}  // namespace

MlpParams init_params(std::span<const int> layer_sizes, RandomStream& rng) {
    check_layer_sizes(layer_sizes);
    MlpParams p;
    p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const auto in = static_cast<std::size_t>(layer_sizes[l]);
        const auto out = static_cast<std::size_t>(layer_sizes[l + 1]);
        const double sd = std::sqrt(2.0 / static_cast<double>(in));
        Matrix w(out, in);
        for (auto& v : w.values()) v = rng.normal(0.0, sd);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(out, 0.0);
    }
    return p;
}

void forward(const MlpParams& p, const Matrix& x, ForwardCache& cache) {
    check_params(p);
    if (x.rows() != 2) fail_argument("forward: input batch must have 2 feature rows");
    const auto& k = kernels::active();
    const std::size_t batch = x.cols();
    const std::size_t n_layers = p.num_layers();
    cache.layer_sizes = p.layer_sizes;
    cache.batch = batch;
    cache.params_fingerprint = p.fingerprint();
    cache.input.reshape(2, batch);
    std::copy_n(x.data(), x.size(), cache.input.data());
    cache.pre.resize(n_layers);
    cache.activations.resize(n_layers - 1);

    const Matrix* in = &cache.input;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto n_out = static_cast<std::size_t>(p.layer_sizes[l + 1]);
        const auto n_in = static_cast<std::size_t>(p.layer_sizes[l]);
        Matrix& z = cache.pre[l];
        z.reshape(n_out, batch);
        k.dense_forward(p.weights[l].data(), p.biases[l].data(), in->data(), z.data(), n_out, n_in, batch);
        if (l + 1 < n_layers) {
            Matrix& a = cache.activations[l];
            a.reshape(n_out, batch);
            k.relu_forward(z.data(), a.data(), a.size());
            in = &a;
        }
    }
}

ForwardResult forward(const MlpParams& p, const Matrix& x) {
    ForwardResult res;
    forward(p, x, res.cache);
    res.logits = res.cache.pre.back();
    return res;
}

Matrix predict_logits(const MlpParams& p, const Matrix& x) {
    check_params(p);
    if (x.rows() != 2) fail_argument("predict_logits: input batch must have 2 feature rows");
    const auto& k = kernels::active();
    const std::size_t total = x.cols();
    const auto n_classes = static_cast<std::size_t>(p.layer_sizes.back());
    Matrix logits(n_classes, total);

    constexpr std::size_t kChunk = 4096;
    Matrix in_chunk;
    Matrix a;
    Matrix z;
    for (std::size_t start = 0; start < total; start += kChunk) {
        const std::size_t n = std::min(kChunk, total - start);
        in_chunk = Matrix(2, n);
        for (std::size_t f = 0; f < 2; ++f) {
            std::copy_n(x.data() + f * total + start, n, in_chunk.data() + f * n);
        }
        const Matrix* in = &in_chunk;
        for (std::size_t l = 0; l < p.num_layers(); ++l) {
            const auto n_out = static_cast<std::size_t>(p.layer_sizes[l + 1]);
            const auto n_in = static_cast<std::size_t>(p.layer_sizes[l]);
            z = Matrix(n_out, n);
            k.dense_forward(p.weights[l].data(), p.biases[l].data(), in->data(), z.data(), n_out, n_in, n);
            if (l + 1 < p.num_layers()) {
                a = Matrix(n_out, n);
                k.relu_forward(z.data(), a.data(), a.size());
                in = &a;
            }
        }
        for (std::size_t c = 0; c < n_classes; ++c) {
            std::copy_n(z.data() + c * n, n, logits.data() + c * total + start);
        }
    }
    return logits;
}

void softmax(const Matrix& logits, Matrix& out) {
    const std::size_t rows = logits.rows();
    const std::size_t cols = logits.cols();
    for (const double v : logits.values()) {
        if (std::isnan(v)) fail_argument("softmax: NaN logit");
        if (!std::isfinite(v)) fail_argument("softmax: infinite logit");
    }
    RealVec col_max(cols, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) col_max[c] = std::max(col_max[c], logits(r, c));
    }
    out.reshape(rows, cols);
    RealVec col_sum(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = std::exp(logits(r, c) - col_max[c]);
            out(r, c) = e;
            col_sum[c] += e;
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out(r, c) /= col_sum[c];
    }
}

Matrix softmax(const Matrix& logits) {
    Matrix out;
    softmax(logits, out);
    return out;
}

double cross_entropy(const Matrix& probs, const OneHotMatrix& one_hot) {
    if (probs.rows() != one_hot.cols() || probs.cols() != one_hot.rows()) {
        fail_argument("cross_entropy: probabilities and targets have different shapes");
    }
    const std::size_t batch = probs.cols();
    if (batch == 0) fail_argument("cross_entropy: empty batch");
    const double floor = std::log(kLogClamp);
    double total = 0.0;
    for (std::size_t k = 0; k < batch; ++k) {
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            if (one_hot.at(k, i) == 0) continue;
            const double p = probs(i, k);
            total += p > kLogClamp ? std::log(p) : floor;
        }
    }
    return -total / static_cast<double>(batch);
}

void backward(const MlpParams& p, const ForwardCache& cache, const Matrix& probs, const OneHotMatrix& one_hot,
              Gradients& g, BackwardWorkspace& ws) {
    check_params(p);
    if (cache.layer_sizes != p.layer_sizes || cache.pre.size() != p.num_layers() ||
        cache.params_fingerprint != p.fingerprint()) {
        fail_argument("backward: cache was not produced by a forward pass with these parameters");
    }
    if (!p.same_shape(g)) fail_argument("backward: gradient storage has the wrong shape");
    const std::size_t batch = cache.batch;
    const auto n_classes = static_cast<std::size_t>(p.layer_sizes.back());
    if (probs.rows() != n_classes || probs.cols() != batch || one_hot.rows() != batch ||
        one_hot.cols() != n_classes) {
        fail_argument("backward: probabilities or targets do not match the cached batch");
    }

    const auto& k = kernels::active();
    const double inv_k = 1.0 / static_cast<double>(batch);
    ws.delta.reshape(n_classes, batch);
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t b = 0; b < batch; ++b) {
            ws.delta(c, b) = (probs(c, b) - static_cast<double>(one_hot.at(b, c))) * inv_k;
        }
    }

    for (std::size_t l = p.num_layers(); l-- > 0;) {
        const auto n_out = static_cast<std::size_t>(p.layer_sizes[l + 1]);
        const auto n_in = static_cast<std::size_t>(p.layer_sizes[l]);
        const Matrix& in = l == 0 ? cache.input : cache.activations[l - 1];
        k.dense_backward_params(ws.delta.data(), in.data(), g.weights[l].data(), g.biases[l].data(), n_out, n_in,
                                batch);
        if (l > 0) {
            ws.prev.reshape(n_in, batch);
            k.dense_backward_input(p.weights[l].data(), ws.delta.data(), ws.prev.data(), n_out, n_in, batch);
            k.relu_backward(cache.pre[l - 1].data(), ws.prev.data(), ws.prev.size());
            std::swap(ws.delta, ws.prev);
        }
    }
}

Gradients backward(const MlpParams& p, const ForwardCache& cache, const Matrix& probs, const OneHotMatrix& one_hot) {
    Gradients g = p.zeros_like();
    BackwardWorkspace ws;
    backward(p, cache, probs, one_hot, g, ws);
    return g;
}

AdamState make_adam_state(const MlpParams& p, double learning_rate) {
    AdamState st;
    st.m = p.zeros_like();
    st.v = p.zeros_like();
    st.learning_rate = learning_rate;
    return st;
}

void adam_step_inplace(MlpParams& p, const Gradients& g, AdamState& st) {
    if (!p.same_shape(g) || !p.same_shape(st.m) || !p.same_shape(st.v)) {
        fail_argument("adam_step: parameter, gradient and moment shapes differ");
    }
    if (st.t < 0) fail_argument("adam_step: negative step counter");
    st.t += 1;
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    const auto& k = kernels::active();
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
        k.adam_update(p.weights[l].data(), g.weights[l].data(), st.m.weights[l].data(), st.v.weights[l].data(),
                      p.weights[l].size(), st.beta1, st.beta2, c1, c2, st.learning_rate, st.epsilon);
        k.adam_update(p.biases[l].data(), g.biases[l].data(), st.m.biases[l].data(), st.v.biases[l].data(),
                      p.biases[l].size(), st.beta1, st.beta2, c1, c2, st.learning_rate, st.epsilon);
    }
}

std::pair<MlpParams, AdamState> adam_step(MlpParams p, const Gradients& g, AdamState st) {
    adam_step_inplace(p, g, st);
    return {std::move(p), std::move(st)};
}

IndexVec argmax_columns(const Matrix& m) {
    IndexVec out(m.cols(), 0);
    RealVec best(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) best[c] = m(0, c);
    for (std::size_t r = 1; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (m(r, c) > best[c]) {
                best[c] = m(r, c);
                out[c] = static_cast<std::int32_t>(r);
            }
        }
    }
    return out;
}

}  // namespace fsolink

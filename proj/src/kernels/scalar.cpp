#include <cmath>

#include "fsolink/kernels.hpp"
#include "kernels_internal.hpp"

namespace fsolink::kernels {
namespace {

void dense_forward(const double* w, const double* bias, const double* in, double* out, std::size_t n_out,
                   std::size_t n_in, std::size_t batch) {
    for (std::size_t o = 0; o < n_out; ++o) {
        const double* wrow = w + o * n_in;
        double* orow = out + o * batch;
        for (std::size_t b = 0; b < batch; ++b) {
            double acc = bias[o];
            for (std::size_t i = 0; i < n_in; ++i) acc = std::fma(wrow[i], in[i * batch + b], acc);
            orow[b] = acc;
        }
    }
}

void dense_backward_input(const double* w, const double* delta, double* grad_in, std::size_t n_out,
                          std::size_t n_in, std::size_t batch) {
    for (std::size_t i = 0; i < n_in; ++i) {
        double* grow = grad_in + i * batch;
        for (std::size_t b = 0; b < batch; ++b) {
            double acc = 0.0;
            for (std::size_t o = 0; o < n_out; ++o) acc = std::fma(w[o * n_in + i], delta[o * batch + b], acc);
            grow[b] = acc;
        }
    }
}

double canonical_dot(const double* x, const double* y, std::size_t n) {
    double lanes[kReductionLanes] = {};
    for (std::size_t j = 0; j < n; ++j) lanes[j % kReductionLanes] = std::fma(x[j], y[j], lanes[j % kReductionLanes]);
    return combine_lanes(lanes);
}

double canonical_sum(const double* x, std::size_t n) {
    double lanes[kReductionLanes] = {};
    for (std::size_t j = 0; j < n; ++j) lanes[j % kReductionLanes] += x[j];
    return combine_lanes(lanes);
}

void dense_backward_params(const double* delta, const double* in, double* grad_w, double* grad_b,
                           std::size_t n_out, std::size_t n_in, std::size_t batch) {
    for (std::size_t o = 0; o < n_out; ++o) {
        const double* drow = delta + o * batch;
        for (std::size_t i = 0; i < n_in; ++i) grad_w[o * n_in + i] = canonical_dot(drow, in + i * batch, batch);
        grad_b[o] = canonical_sum(drow, batch);
    }
}

void relu_forward(const double* z, double* a, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) a[k] = z[k] > 0.0 ? z[k] : 0.0;
}

void relu_backward(const double* z, double* delta, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        if (!(z[k] > 0.0)) delta[k] = 0.0;
    }
}

void nearest_point(const double* re, const double* im, const double* gain, const double* pre, const double* pim,
                   std::size_t m, std::size_t n, std::int32_t* out) {
    for (std::size_t k = 0; k < n; ++k) {
        double best = 0.0;
        std::int32_t best_idx = 0;
        for (std::size_t c = 0; c < m; ++c) {
            const double dr = re[k] - gain[k] * pre[c];
            const double di = im[k] - gain[k] * pim[c];
            const double d = dr * dr + di * di;
            if (c == 0 || d < best) {
                best = d;
                best_idx = static_cast<std::int32_t>(c);
            }
        }
        out[k] = best_idx;
    }
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n, double b1, double b2, double c1,
                 double c2, double lr, double eps) {
    const double one_b1 = 1.0 - b1;
    const double one_b2 = 1.0 - b2;
    for (std::size_t k = 0; k < n; ++k) {
        m[k] = b1 * m[k] + one_b1 * g[k];
        v[k] = b2 * v[k] + one_b2 * (g[k] * g[k]);
        const double m_hat = m[k] / c1;
        const double v_hat = v[k] / c2;
        p[k] = p[k] - lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        "scalar",       dense_forward, dense_backward_input, dense_backward_params, relu_forward, relu_backward,
        nearest_point, adam_update,
    };
    return table;
}

}  // namespace fsolink::kernels

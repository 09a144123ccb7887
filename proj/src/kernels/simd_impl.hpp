#pragma once

// Vector kernel bodies, written once against an ISA traits type `V` and
// instantiated in one translation unit per ISA (compiled with that ISA's
// flags only). V provides: reg, width (4 or 8), load, store, set1, zero, fma,
// add, sub, mul, div, sqrt, relu, keep_where_positive, update_min and
// store_index. Operation order matches the scalar reference exactly.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <string_view>

#include "kernels_internal.hpp"

namespace fsolink::kernels::simd {

template <typename V>
struct Kernels {
    using Reg = typename V::reg;
    static constexpr std::size_t W = V::width;
    static constexpr std::size_t kRegsPerPair = kReductionLanes / W;
    static constexpr std::size_t kChunk = 512;
    // Sample tile of the matrix products; a multiple of 2 * W that keeps the
    // input rows of one tile resident in L2.
    static constexpr std::size_t kTile = 256;

    static void dense_forward(const double* w, const double* bias, const double* in, double* out,
                              std::size_t n_out, std::size_t n_in, std::size_t batch) {
        const std::size_t wide = batch - batch % (2 * W);
        for (std::size_t start = 0; start < wide; start += kTile) {
            const std::size_t stop = start + kTile < wide ? start + kTile : wide;
            forward_tile(w, bias, in, out, n_out, n_in, batch, start, stop);
        }
        for (std::size_t oo = 0; oo < n_out; ++oo) {
            for (std::size_t b = wide; b < batch; ++b) {
                double acc = bias[oo];
                for (std::size_t i = 0; i < n_in; ++i) acc = std::fma(w[oo * n_in + i], in[i * batch + b], acc);
                out[oo * batch + b] = acc;
            }
        }
    }

    static void forward_tile(const double* w, const double* bias, const double* in, double* out, std::size_t n_out,
                             std::size_t n_in, std::size_t batch, std::size_t start, std::size_t stop) {
        constexpr std::size_t kOut = 4;
        std::size_t o = 0;
        for (; o + kOut <= n_out; o += kOut) {
            for (std::size_t b = start; b < stop; b += 2 * W) {
                Reg acc[kOut][2];
#pragma GCC unroll 4
                for (std::size_t r = 0; r < kOut; ++r) acc[r][0] = acc[r][1] = V::set1(bias[o + r]);
                for (std::size_t i = 0; i < n_in; ++i) {
                    const Reg x0 = V::load(in + i * batch + b);
                    const Reg x1 = V::load(in + i * batch + b + W);
#pragma GCC unroll 4
                    for (std::size_t r = 0; r < kOut; ++r) {
                        const Reg k = V::set1(w[(o + r) * n_in + i]);
                        acc[r][0] = V::fma(k, x0, acc[r][0]);
                        acc[r][1] = V::fma(k, x1, acc[r][1]);
                    }
                }
#pragma GCC unroll 4
                for (std::size_t r = 0; r < kOut; ++r) {
                    V::store(out + (o + r) * batch + b, acc[r][0]);
                    V::store(out + (o + r) * batch + b + W, acc[r][1]);
                }
            }
        }
        for (; o < n_out; ++o) {
            for (std::size_t b = start; b < stop; b += W) {
                Reg acc = V::set1(bias[o]);
                for (std::size_t i = 0; i < n_in; ++i) acc = V::fma(V::set1(w[o * n_in + i]), V::load(in + i * batch + b), acc);
                V::store(out + o * batch + b, acc);
            }
        }
    }

    static void dense_backward_input(const double* w, const double* delta, double* grad_in, std::size_t n_out,
                                     std::size_t n_in, std::size_t batch) {
        const std::size_t wide = batch - batch % (2 * W);
        for (std::size_t start = 0; start < wide; start += kTile) {
            const std::size_t stop = start + kTile < wide ? start + kTile : wide;
            backward_input_tile(w, delta, grad_in, n_out, n_in, batch, start, stop);
        }
        for (std::size_t ii = 0; ii < n_in; ++ii) {
            for (std::size_t b = wide; b < batch; ++b) {
                double acc = 0.0;
                for (std::size_t o = 0; o < n_out; ++o) acc = std::fma(w[o * n_in + ii], delta[o * batch + b], acc);
                grad_in[ii * batch + b] = acc;
            }
        }
    }

    static void backward_input_tile(const double* w, const double* delta, double* grad_in, std::size_t n_out,
                                    std::size_t n_in, std::size_t batch, std::size_t start, std::size_t stop) {
        constexpr std::size_t kIn = 4;
        std::size_t i = 0;
        for (; i + kIn <= n_in; i += kIn) {
            for (std::size_t b = start; b < stop; b += 2 * W) {
                Reg acc[kIn][2];
#pragma GCC unroll 4
                for (std::size_t r = 0; r < kIn; ++r) acc[r][0] = acc[r][1] = V::zero();
                for (std::size_t o = 0; o < n_out; ++o) {
                    const Reg x0 = V::load(delta + o * batch + b);
                    const Reg x1 = V::load(delta + o * batch + b + W);
#pragma GCC unroll 4
                    for (std::size_t r = 0; r < kIn; ++r) {
                        const Reg k = V::set1(w[o * n_in + i + r]);
                        acc[r][0] = V::fma(k, x0, acc[r][0]);
                        acc[r][1] = V::fma(k, x1, acc[r][1]);
                    }
                }
#pragma GCC unroll 4
                for (std::size_t r = 0; r < kIn; ++r) {
                    V::store(grad_in + (i + r) * batch + b, acc[r][0]);
                    V::store(grad_in + (i + r) * batch + b + W, acc[r][1]);
                }
            }
        }
        for (; i < n_in; ++i) {
            for (std::size_t b = start; b < stop; b += W) {
                Reg acc = V::zero();
                for (std::size_t o = 0; o < n_out; ++o) {
                    acc = V::fma(V::set1(w[o * n_in + i]), V::load(delta + o * batch + b), acc);
                }
                V::store(grad_in + i * batch + b, acc);
            }
        }
    }

    // Partial sums of pair (o, i) live at acc[(o * n_in + i) * 8 .. + 8),
    // lane j holding the terms with batch index = j (mod 8).
    static void dense_backward_params(const double* delta, const double* in, double* grad_w, double* grad_b,
                                      std::size_t n_out, std::size_t n_in, std::size_t batch) {
        constexpr std::size_t kOut = W / 2;
        constexpr std::size_t kIn = 2;
        constexpr std::size_t L = kReductionLanes;
        const std::size_t wide = batch - batch % L;
        std::vector<double> acc(n_out * n_in * L, 0.0);
        std::vector<double> bias_acc(n_out * L, 0.0);

        for (std::size_t start = 0; start < wide; start += kChunk) {
            const std::size_t stop = start + kChunk < wide ? start + kChunk : wide;
            std::size_t o = 0;
            for (; o + kOut <= n_out; o += kOut) {
                std::size_t i = 0;
                for (; i + kIn <= n_in; i += kIn) {
                    Reg a[kOut][kIn][kRegsPerPair];
#pragma GCC unroll 8
                    for (std::size_t p = 0; p < kOut * kIn * kRegsPerPair; ++p) {
                        const std::size_t r = p / (kIn * kRegsPerPair);
                        const std::size_t c = (p / kRegsPerPair) % kIn;
                        const std::size_t q = p % kRegsPerPair;
                        a[r][c][q] = V::load(acc.data() + ((o + r) * n_in + i + c) * L + q * W);
                    }
                    for (std::size_t b = start; b < stop; b += L) {
                        Reg d[kOut][kRegsPerPair];
                        Reg x[kIn][kRegsPerPair];
#pragma GCC unroll 8
                        for (std::size_t p = 0; p < kOut * kRegsPerPair; ++p) {
                            d[p / kRegsPerPair][p % kRegsPerPair] =
                                V::load(delta + (o + p / kRegsPerPair) * batch + b + (p % kRegsPerPair) * W);
                        }
#pragma GCC unroll 8
                        for (std::size_t p = 0; p < kIn * kRegsPerPair; ++p) {
                            x[p / kRegsPerPair][p % kRegsPerPair] =
                                V::load(in + (i + p / kRegsPerPair) * batch + b + (p % kRegsPerPair) * W);
                        }
#pragma GCC unroll 8
                        for (std::size_t p = 0; p < kOut * kIn * kRegsPerPair; ++p) {
                            const std::size_t r = p / (kIn * kRegsPerPair);
                            const std::size_t c = (p / kRegsPerPair) % kIn;
                            const std::size_t q = p % kRegsPerPair;
                            a[r][c][q] = V::fma(d[r][q], x[c][q], a[r][c][q]);
                        }
                    }
#pragma GCC unroll 8
                    for (std::size_t p = 0; p < kOut * kIn * kRegsPerPair; ++p) {
                        const std::size_t r = p / (kIn * kRegsPerPair);
                        const std::size_t c = (p / kRegsPerPair) % kIn;
                        const std::size_t q = p % kRegsPerPair;
                        V::store(acc.data() + ((o + r) * n_in + i + c) * L + q * W, a[r][c][q]);
                    }
                }
                for (; i < n_in; ++i) {
                    for (std::size_t r = 0; r < kOut; ++r) pair_chunk(delta, in, acc.data(), o + r, i, n_in, batch, start, stop);
                }
            }
            for (; o < n_out; ++o) {
                for (std::size_t i = 0; i < n_in; ++i) pair_chunk(delta, in, acc.data(), o, i, n_in, batch, start, stop);
            }
            for (std::size_t oo = 0; oo < n_out; ++oo) {
                Reg s[kRegsPerPair];
                for (std::size_t q = 0; q < kRegsPerPair; ++q) s[q] = V::load(bias_acc.data() + oo * L + q * W);
                for (std::size_t b = start; b < stop; b += L) {
                    for (std::size_t q = 0; q < kRegsPerPair; ++q) s[q] = V::add(s[q], V::load(delta + oo * batch + b + q * W));
                }
                for (std::size_t q = 0; q < kRegsPerPair; ++q) V::store(bias_acc.data() + oo * L + q * W, s[q]);
            }
        }

        for (std::size_t o = 0; o < n_out; ++o) {
            const double* drow = delta + o * batch;
            for (std::size_t i = 0; i < n_in; ++i) {
                double* lanes = acc.data() + (o * n_in + i) * L;
                const double* xrow = in + i * batch;
                for (std::size_t b = wide; b < batch; ++b) lanes[b % L] = std::fma(drow[b], xrow[b], lanes[b % L]);
                grad_w[o * n_in + i] = combine_lanes(lanes);
            }
            double* lanes = bias_acc.data() + o * L;
            for (std::size_t b = wide; b < batch; ++b) lanes[b % L] += drow[b];
            grad_b[o] = combine_lanes(lanes);
        }
    }

    static void pair_chunk(const double* delta, const double* in, double* acc, std::size_t o, std::size_t i,
                           std::size_t n_in, std::size_t batch, std::size_t start, std::size_t stop) {
        constexpr std::size_t L = kReductionLanes;
        Reg a[kRegsPerPair];
        double* lanes = acc + (o * n_in + i) * L;
        for (std::size_t q = 0; q < kRegsPerPair; ++q) a[q] = V::load(lanes + q * W);
        for (std::size_t b = start; b < stop; b += L) {
            for (std::size_t q = 0; q < kRegsPerPair; ++q) {
                a[q] = V::fma(V::load(delta + o * batch + b + q * W), V::load(in + i * batch + b + q * W), a[q]);
            }
        }
        for (std::size_t q = 0; q < kRegsPerPair; ++q) V::store(lanes + q * W, a[q]);
    }

    static void relu_forward(const double* z, double* a, std::size_t n) {
        std::size_t k = 0;
        for (; k + W <= n; k += W) V::store(a + k, V::relu(V::load(z + k)));
        for (; k < n; ++k) a[k] = z[k] > 0.0 ? z[k] : 0.0;
    }

    static void relu_backward(const double* z, double* delta, std::size_t n) {
        std::size_t k = 0;
        for (; k + W <= n; k += W) V::store(delta + k, V::keep_where_positive(V::load(z + k), V::load(delta + k)));
        for (; k < n; ++k) {
            if (!(z[k] > 0.0)) delta[k] = 0.0;
        }
    }

    static void nearest_point(const double* re, const double* im, const double* gain, const double* pre,
                              const double* pim, std::size_t m, std::size_t n, std::int32_t* out) {
        std::size_t k = 0;
        if (m > 0) {
            for (; k + W <= n; k += W) {
                const Reg r = V::load(re + k);
                const Reg q = V::load(im + k);
                const Reg g = V::load(gain + k);
                Reg best = V::zero();
                Reg best_idx = V::zero();
                for (std::size_t c = 0; c < m; ++c) {
                    const Reg dr = V::sub(r, V::mul(g, V::set1(pre[c])));
                    const Reg di = V::sub(q, V::mul(g, V::set1(pim[c])));
                    const Reg d = V::add(V::mul(dr, dr), V::mul(di, di));
                    if (c == 0) {
                        best = d;
                    } else {
                        V::update_min(d, best, best_idx, V::set1(static_cast<double>(c)));
                    }
                }
                V::store_index(out + k, best_idx);
            }
        }
        for (; k < n; ++k) {
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

    static void adam_update(double* p, const double* g, double* m, double* v, std::size_t n, double b1, double b2,
                            double c1, double c2, double lr, double eps) {
        const double one_b1 = 1.0 - b1;
        const double one_b2 = 1.0 - b2;
        const Reg vb1 = V::set1(b1), vb2 = V::set1(b2), v1b1 = V::set1(one_b1), v1b2 = V::set1(one_b2);
        const Reg vc1 = V::set1(c1), vc2 = V::set1(c2), vlr = V::set1(lr), veps = V::set1(eps);
        std::size_t k = 0;
        for (; k + W <= n; k += W) {
            const Reg gk = V::load(g + k);
            const Reg mk = V::add(V::mul(vb1, V::load(m + k)), V::mul(v1b1, gk));
            const Reg vk = V::add(V::mul(vb2, V::load(v + k)), V::mul(v1b2, V::mul(gk, gk)));
            V::store(m + k, mk);
            V::store(v + k, vk);
            const Reg m_hat = V::div(mk, vc1);
            const Reg v_hat = V::div(vk, vc2);
            const Reg step = V::div(V::mul(vlr, m_hat), V::add(V::sqrt(v_hat), veps));
            V::store(p + k, V::sub(V::load(p + k), step));
        }
        for (; k < n; ++k) {
            m[k] = b1 * m[k] + one_b1 * g[k];
            v[k] = b2 * v[k] + one_b2 * (g[k] * g[k]);
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            p[k] = p[k] - lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }

    static KernelTable table(std::string_view name) {
        return KernelTable{name,          dense_forward, dense_backward_input, dense_backward_params,
                           relu_forward,  relu_backward, nearest_point,        adam_update};
    }
};

}  // namespace fsolink::kernels::simd

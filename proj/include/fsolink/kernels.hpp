#pragma once

// Data-parallel inner loops used by the network and the ML detector.
//
// Every kernel has a scalar reference and optional vector variants. All
// variants perform the same IEEE operations in the same order, so they are
// bit-identical and the equivalence tests assert exact equality. Matrix
// products accumulate with fused multiply-add (std::fma in the scalar
// reference); the remaining kernels never fuse.
//
// Matrix conventions: weights are row-major (n_out x n_in); batches are
// feature-major, i.e. row f holds feature f for all `batch` samples
// contiguously.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fsolink::kernels {

// Lane count of the canonical dot-product reduction. A dot product over n
// terms fuses term j into partial sum (j % 8), then combines
// ((p0+p4)+(p2+p6)) + ((p1+p5)+(p3+p7)).
inline constexpr std::size_t kReductionLanes = 8;

struct KernelTable {
    std::string_view name;

    // acc = bias[o]; acc = fma(w[o][i], in[i][b], acc) for i ascending.
    void (*dense_forward)(const double* w, const double* bias, const double* in, double* out,
                          std::size_t n_out, std::size_t n_in, std::size_t batch);

    // acc = 0; acc = fma(w[o][i], delta[o][b], acc) for o ascending.
    void (*dense_backward_input)(const double* w, const double* delta, double* grad_in,
                                 std::size_t n_out, std::size_t n_in, std::size_t batch);

    // grad_w[o][i] = dot(delta[o], in[i]) with the canonical reduction;
    // grad_b[o] = sum of delta[o] with the same lane split and plain adds.
    void (*dense_backward_params)(const double* delta, const double* in, double* grad_w, double* grad_b,
                                  std::size_t n_out, std::size_t n_in, std::size_t batch);

    // a[k] = max(z[k], 0) with a[k] = 0 for z[k] <= 0 (including -0.0).
    void (*relu_forward)(const double* z, double* a, std::size_t n);

    // delta[k] = 0 where z[k] <= 0.
    void (*relu_backward)(const double* z, double* delta, std::size_t n);

    // out[k] = argmin_m |(re[k], im[k]) - gain[k] * (pre[m], pim[m])|^2,
    // lowest m on ties.
    void (*nearest_point)(const double* re, const double* im, const double* gain, const double* pre,
                          const double* pim, std::size_t m, std::size_t n, std::int32_t* out);

    // Bias-corrected Adam on a flat parameter block:
    //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g*g
    //   p = p - lr * (m / c1) / (sqrt(v / c2) + eps)
    // with c1 = 1 - b1^t, c2 = 1 - b2^t supplied by the caller.
    void (*adam_update)(double* p, const double* g, double* m, double* v, std::size_t n, double b1,
                        double b2, double c1, double c2, double lr, double eps);
};

const KernelTable& scalar_table();

// Null when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table();    // AVX2 + FMA
const KernelTable* avx512_table();  // AVX-512F

// Table in use. Chosen once from CPU features; FSOLINK_SIMD=scalar|avx2
// (or avx512) overrides the choice.
const KernelTable& active();

// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

}  // namespace fsolink::kernels

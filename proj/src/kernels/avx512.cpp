#include <immintrin.h>

#include "simd_impl.hpp"

namespace fsolink::kernels {
namespace {

struct Avx512 {
    using reg = __m512d;
    static constexpr std::size_t width = 8;

    static reg load(const double* p) { return _mm512_loadu_pd(p); }
    static void store(double* p, reg x) { _mm512_storeu_pd(p, x); }
    static reg set1(double x) { return _mm512_set1_pd(x); }
    static reg zero() { return _mm512_setzero_pd(); }
    static reg fma(reg a, reg b, reg c) { return _mm512_fmadd_pd(a, b, c); }
    static reg add(reg a, reg b) { return _mm512_add_pd(a, b); }
    static reg sub(reg a, reg b) { return _mm512_sub_pd(a, b); }
    static reg mul(reg a, reg b) { return _mm512_mul_pd(a, b); }
    static reg div(reg a, reg b) { return _mm512_div_pd(a, b); }
    static reg sqrt(reg a) { return _mm512_sqrt_pd(a); }

    static reg relu(reg z) { return _mm512_maskz_mov_pd(_mm512_cmp_pd_mask(z, zero(), _CMP_GT_OQ), z); }
    static reg keep_where_positive(reg z, reg d) {
        return _mm512_maskz_mov_pd(_mm512_cmp_pd_mask(z, zero(), _CMP_GT_OQ), d);
    }

    static void update_min(reg d, reg& best, reg& idx, reg cand) {
        const __mmask8 less = _mm512_cmp_pd_mask(d, best, _CMP_LT_OQ);
        best = _mm512_mask_mov_pd(best, less, d);
        idx = _mm512_mask_mov_pd(idx, less, cand);
    }

    static void store_index(std::int32_t* out, reg idx) {
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out), _mm512_cvttpd_epi32(idx));
    }
};

}  // namespace

const KernelTable& avx512_kernels() {
    static const KernelTable table = simd::Kernels<Avx512>::table("avx512");
    return table;
}

}  // namespace fsolink::kernels

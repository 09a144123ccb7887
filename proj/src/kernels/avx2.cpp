#include <immintrin.h>

#include "simd_impl.hpp"

namespace fsolink::kernels {
namespace {

struct Avx2 {
    using reg = __m256d;
    static constexpr std::size_t width = 4;

    static reg load(const double* p) { return _mm256_loadu_pd(p); }
    static void store(double* p, reg x) { _mm256_storeu_pd(p, x); }
    static reg set1(double x) { return _mm256_set1_pd(x); }
    static reg zero() { return _mm256_setzero_pd(); }
    static reg fma(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
    static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
    static reg sub(reg a, reg b) { return _mm256_sub_pd(a, b); }
    static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
    static reg div(reg a, reg b) { return _mm256_div_pd(a, b); }
    static reg sqrt(reg a) { return _mm256_sqrt_pd(a); }

    static reg relu(reg z) { return _mm256_and_pd(z, _mm256_cmp_pd(z, zero(), _CMP_GT_OQ)); }
    static reg keep_where_positive(reg z, reg d) { return _mm256_and_pd(d, _mm256_cmp_pd(z, zero(), _CMP_GT_OQ)); }

    static void update_min(reg d, reg& best, reg& idx, reg cand) {
        const reg less = _mm256_cmp_pd(d, best, _CMP_LT_OQ);
        best = _mm256_blendv_pd(best, d, less);
        idx = _mm256_blendv_pd(idx, cand, less);
    }

    static void store_index(std::int32_t* out, reg idx) {
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out), _mm256_cvttpd_epi32(idx));
    }
};

}  // namespace

const KernelTable& avx2_kernels() {
    static const KernelTable table = simd::Kernels<Avx2>::table("avx2");
    return table;
}

}  // namespace fsolink::kernels

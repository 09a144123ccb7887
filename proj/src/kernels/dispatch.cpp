#include <cstdlib>
#include <string_view>

#include "fsolink/kernels.hpp"

namespace fsolink::kernels {

#if defined(FSOLINK_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(FSOLINK_HAVE_AVX512)
const KernelTable& avx512_kernels();
#endif

const KernelTable* avx2_table() {
#if defined(FSOLINK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2_kernels() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* avx512_table() {
#if defined(FSOLINK_HAVE_AVX512) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx512f");
    return supported ? &avx512_kernels() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& select() {
    const char* env = std::getenv("FSOLINK_SIMD");
    const std::string_view want = env != nullptr ? env : "";
    if (want == "scalar") return scalar_table();
    if (want == "avx2") {
        if (const auto* t = avx2_table(); t != nullptr) return *t;
        return scalar_table();
    }
    if (const auto* t = avx512_table(); t != nullptr) return *t;
    if (const auto* t = avx2_table(); t != nullptr) return *t;
    return scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> out{&scalar_table()};
    if (const auto* t = avx2_table(); t != nullptr) out.push_back(t);
    if (const auto* t = avx512_table(); t != nullptr) out.push_back(t);
    return out;
}

}  // namespace fsolink::kernels

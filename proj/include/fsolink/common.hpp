#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fsolink {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;
using RealVec = std::vector<double>;
using IndexVec = std::vector<std::int32_t>;

inline constexpr std::string_view kVersion = "1.0.0";

// Raised when an operation is invoked on an object that is not ready for it
// (e.g. evaluating an untrained network detector).
class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Model file failed its checksum or structural validation.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail_argument(const std::string& what) {
    throw std::invalid_argument(what);
}

// 64-bit FNV-1a, used for frame checksums and configuration digests.
class Fnv1a {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    template <typename T>
    void update_value(const T& v) { update(&v, sizeof(T)); }
    [[nodiscard]] std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t v);

}  // namespace fsolink

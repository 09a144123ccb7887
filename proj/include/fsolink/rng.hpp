#pragma once

#include <cstdint>
#include <random>

namespace fsolink {

// splitmix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed for stream `index` under `parent`. Distinct (parent, index)
// pairs give independent-looking streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Named sub-streams of a simulation point. Keeping them separate lets
// different CSI models and detector sets share symbols, fading and noise.
enum class StreamId : std::uint64_t {
    Symbols = 1,
    Fading = 2,
    Noise = 3,
    CsiError = 4,
    Training = 5,
    Init = 6,
    TrainingSnr = 7,
};

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    RandomStream child(StreamId id) const {
        return RandomStream(derive_seed(seed_, static_cast<std::uint64_t>(id)));
    }
    RandomStream child(std::uint64_t index) const {
        return RandomStream(derive_seed(seed_, index));
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return normal_(engine_) * stddev + mean;
    }
    double standard_normal() { return normal_(engine_); }

    // Uniform integer in [0, n).
    std::int32_t uniform_index(std::int32_t n) {
        return std::uniform_int_distribution<std::int32_t>(0, n - 1)(engine_);
    }

    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uint64_t seed_;
};

}  // namespace fsolink

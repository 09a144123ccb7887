#pragma once

#include <span>

#include "fsolink/channel.hpp"
#include "fsolink/modem.hpp"
#include "fsolink/rng.hpp"

namespace fsolink {

// Everything that defines the transmit -> channel -> receive front end.
struct LinkConfig {
    int order = 16;
    FadingConfig fading;
    CsiConfig csi;
    double dc_bias = kDefaultDcBias;

    void validate() const;

    bool operator==(const LinkConfig&) const = default;
};

// One frame as seen by the detectors.
struct ReceivedFrame {
    IndexVec indices;     // transmitted symbols
    RealVec h;            // true gains
    RealVec h_hat;        // receiver estimates
    ComplexVec r;         // bias-removed received samples
    ComplexVec equalized; // r / h_hat

    // Checksum over everything a detector can observe plus the truth.
    [[nodiscard]] std::uint64_t checksum() const;
};

// Generates consecutive frames from four independent streams (symbols,
// fading, noise, CSI error) derived from one seed. Changing the CSI model or
// the detectors never changes the symbols, gains or noise.
class LinkSimulator {
public:
    LinkSimulator(LinkConfig cfg, std::uint64_t seed);

    // n0 holds one noise variance for the whole frame or one per symbol.
    // A variance of 0 means noiseless.
    ReceivedFrame next_frame(std::size_t n, std::span<const double> n0);
    ReceivedFrame next_frame(std::size_t n, double n0) { return next_frame(n, std::span<const double>(&n0, 1)); }

    [[nodiscard]] const LinkConfig& config() const { return cfg_; }
    [[nodiscard]] const Constellation& constellation() const { return constellation_; }

private:
    LinkConfig cfg_;
    Constellation constellation_;
    RandomStream symbols_;
    RandomStream fading_;
    RandomStream noise_;
    RandomStream csi_;
};

}  // namespace fsolink

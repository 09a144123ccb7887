#pragma once

#include <span>
#include <string_view>

#include "fsolink/common.hpp"
#include "fsolink/rng.hpp"

namespace fsolink {

// Log-normal block fading. `sigma` is the standard deviation of log h;
// `correlation_length` is the number of consecutive symbols sharing one gain
// (1 = uncorrelated).
struct FadingConfig {
    double sigma = 0.1;
    int correlation_length = 1;

    void validate() const;

    bool operator==(const FadingConfig&) const = default;
};

enum class CsiMode { Perfect, Imperfect };

std::string_view to_string(CsiMode mode);
CsiMode csi_mode_from_string(std::string_view s);

// Receiver-side channel knowledge. In Imperfect mode the receiver samples the
// true gain at the start of each assumed block of `assumed_correlation_length`
// symbols, holds it across the block, and multiplies it by exp(e) with
// e ~ N(0, sigma_e^2) drawn once per assumed block.
struct CsiConfig {
    CsiMode mode = CsiMode::Perfect;
    double sigma_e = 0.0;
    int assumed_correlation_length = 1;

    // `true_correlation_length` is needed to check that at least one
    // mismatch source is active in Imperfect mode.
    void validate(int true_correlation_length) const;

    bool operator==(const CsiConfig&) const = default;

    static CsiConfig perfect() { return {}; }
    // Default imperfect model for a fading strength: sigma_e = sigma / 2,
    // refreshed every symbol.
    static CsiConfig default_imperfect(double fading_sigma) {
        return {CsiMode::Imperfect, fading_sigma / 2.0, 1};
    }
};

struct ChannelRealization {
    RealVec h;
    RealVec h_hat;
};

RealVec gen_lognormal(std::int64_t n, const FadingConfig& cfg, RandomStream& rng);

// Circularly-symmetric complex Gaussian noise of total variance n0.
ComplexVec add_awgn(std::span<const Complex> samples, double n0, RandomStream& rng);

RealVec estimate_csi(std::span<const double> h, const CsiConfig& cfg, RandomStream& rng);

ComplexVec apply_channel(std::span<const Complex> tx_biased, std::span<const double> h);

// Bias removal scales the known bias by the receiver's estimate, so an
// imperfect estimate leaves a residual offset (h - h_hat) * bias.
ComplexVec remove_dc(std::span<const Complex> y, std::span<const double> h_hat, double bias);

ComplexVec equalize(std::span<const Complex> r, std::span<const double> h_hat);

// N0 for a given Es/N0 in dB with Es = 1.
double noise_variance(double esn0_db);

}  // namespace fsolink

#include "fsolink/channel.hpp"

#include <cmath>
#include <string>

namespace fsolink {

void FadingConfig::validate() const {
    if (!std::isfinite(sigma) || sigma <= 0.0) fail_argument("fading.sigma must be finite and positive");
    if (correlation_length < 1) fail_argument("fading.correlation_length must be >= 1");
}

std::string_view to_string(CsiMode mode) {
    return mode == CsiMode::Perfect ? "perfect" : "imperfect";
}

CsiMode csi_mode_from_string(std::string_view s) {
    if (s == "perfect") return CsiMode::Perfect;
    if (s == "imperfect") return CsiMode::Imperfect;
    fail_argument("unknown CSI mode '" + std::string(s) + "'");
}

void CsiConfig::validate(int true_correlation_length) const {
    if (mode == CsiMode::Perfect) return;
    if (!std::isfinite(sigma_e) || sigma_e < 0.0) fail_argument("csi.sigma_e must be finite and >= 0");
    if (assumed_correlation_length < 1) fail_argument("csi.assumed_correlation_length must be >= 1");
    if (sigma_e == 0.0 && assumed_correlation_length == true_correlation_length) {
        fail_argument("imperfect CSI needs sigma_e > 0 or an assumed correlation length different from the true one");
    }
}

RealVec gen_lognormal(std::int64_t n, const FadingConfig& cfg, RandomStream& rng) {
    if (n <= 0) fail_argument("gen_lognormal: n must be positive");
    cfg.validate();
    const double mean = -0.5 * cfg.sigma * cfg.sigma;
    const auto count = static_cast<std::size_t>(n);
    const auto block = static_cast<std::size_t>(cfg.correlation_length);
    RealVec h(count);
    for (std::size_t start = 0; start < count; start += block) {
        const double gain = std::exp(rng.normal(mean, cfg.sigma));
        const std::size_t stop = std::min(count, start + block);
        for (std::size_t k = start; k < stop; ++k) h[k] = gain;
    }
    return h;
}

ComplexVec add_awgn(std::span<const Complex> samples, double n0, RandomStream& rng) {
    if (!(n0 > 0.0)) fail_argument("add_awgn: n0 must be positive");
    const double sd = std::sqrt(n0 / 2.0);
    ComplexVec out(samples.begin(), samples.end());
    for (auto& s : out) {
        const double re = rng.standard_normal();
        const double im = rng.standard_normal();
        s += Complex(re * sd, im * sd);
    }
    return out;
}

RealVec estimate_csi(std::span<const double> h, const CsiConfig& cfg, RandomStream& rng) {
    if (h.empty()) fail_argument("estimate_csi: empty gain sequence");
    if (cfg.mode == CsiMode::Perfect) return RealVec(h.begin(), h.end());
    if (cfg.assumed_correlation_length < 1) fail_argument("estimate_csi: assumed_correlation_length must be >= 1");
    if (!(cfg.sigma_e >= 0.0)) fail_argument("estimate_csi: sigma_e must be >= 0");

    const auto block = static_cast<std::size_t>(cfg.assumed_correlation_length);
    RealVec h_hat(h.size());
    for (std::size_t start = 0; start < h.size(); start += block) {
        // The error draw is consumed even at sigma_e = 0 so that the stream
        // position does not depend on the error strength.
        const double e = rng.standard_normal() * cfg.sigma_e;
        const double est = h[start] * std::exp(e);
        const std::size_t stop = std::min(h.size(), start + block);
        for (std::size_t k = start; k < stop; ++k) h_hat[k] = est;
    }
    return h_hat;
}

ComplexVec apply_channel(std::span<const Complex> tx_biased, std::span<const double> h) {
    if (tx_biased.size() != h.size()) fail_argument("apply_channel: length mismatch");
    ComplexVec out(tx_biased.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = h[k] * tx_biased[k];
    return out;
}

ComplexVec remove_dc(std::span<const Complex> y, std::span<const double> h_hat, double bias) {
    if (y.size() != h_hat.size()) fail_argument("remove_dc: length mismatch");
    if (!(bias >= 0.0)) fail_argument("remove_dc: bias must be non-negative");
    ComplexVec out(y.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = y[k] - h_hat[k] * bias;
    return out;
}

ComplexVec equalize(std::span<const Complex> r, std::span<const double> h_hat) {
    if (r.size() != h_hat.size()) fail_argument("equalize: length mismatch");
    ComplexVec out(r.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (!(h_hat[k] > 0.0)) fail_argument("equalize: channel estimate must be positive");
        out[k] = r[k] / h_hat[k];
    }
    return out;
}

double noise_variance(double esn0_db) { return std::pow(10.0, -esn0_db / 10.0); }

}  // namespace fsolink

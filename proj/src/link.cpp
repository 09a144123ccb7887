#include "fsolink/link.hpp"

#include <cmath>

namespace fsolink {

void LinkConfig::validate() const {
    build_qam(order);
    fading.validate();
    csi.validate(fading.correlation_length);
    if (!std::isfinite(dc_bias) || dc_bias < 0.0) fail_argument("modem.dc_bias must be finite and non-negative");
}

std::uint64_t ReceivedFrame::checksum() const {
    Fnv1a f;
    f.update(indices.data(), indices.size() * sizeof(std::int32_t));
    f.update(h.data(), h.size() * sizeof(double));
    f.update(h_hat.data(), h_hat.size() * sizeof(double));
    f.update(r.data(), r.size() * sizeof(Complex));
    return f.value();
}

LinkSimulator::LinkSimulator(LinkConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      constellation_(build_qam(cfg.order)),
      symbols_(RandomStream(seed).child(StreamId::Symbols)),
      fading_(RandomStream(seed).child(StreamId::Fading)),
      noise_(RandomStream(seed).child(StreamId::Noise)),
      csi_(RandomStream(seed).child(StreamId::CsiError)) {
    cfg_.validate();
}

ReceivedFrame LinkSimulator::next_frame(std::size_t n, std::span<const double> n0) {
    if (n == 0) fail_argument("next_frame: empty frame");
    if (n0.size() != 1 && n0.size() != n) fail_argument("next_frame: need one noise variance or one per symbol");
    ReceivedFrame f;
    f.indices.resize(n);
    for (auto& k : f.indices) k = symbols_.uniform_index(cfg_.order);

    const ComplexVec tx = add_dc_bias(map_symbols(f.indices, constellation_), cfg_.dc_bias);
    f.h = gen_lognormal(static_cast<std::int64_t>(n), cfg_.fading, fading_);
    ComplexVec y = apply_channel(tx, f.h);

    // Noise is always drawn so that stream positions do not depend on SNR.
    for (std::size_t k = 0; k < n; ++k) {
        const double var = n0.size() == 1 ? n0[0] : n0[k];
        if (!(var >= 0.0)) fail_argument("next_frame: negative noise variance");
        const double re = noise_.standard_normal();
        const double im = noise_.standard_normal();
        if (var > 0.0) {
            const double sd = std::sqrt(var / 2.0);
            y[k] += Complex(re * sd, im * sd);
        }
    }

    f.h_hat = estimate_csi(f.h, cfg_.csi, csi_);
    f.r = remove_dc(y, f.h_hat, cfg_.dc_bias);
    f.equalized = equalize(f.r, f.h_hat);
    return f;
}

}  // namespace fsolink

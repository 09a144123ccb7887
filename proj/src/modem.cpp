#include "fsolink/modem.hpp"

#include <cmath>
#include <string>

namespace fsolink {

std::string to_hex(std::uint64_t v) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::uint32_t gray_encode(std::uint32_t v) { return v ^ (v >> 1); }

int Constellation::side() const {
    return static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
}

double Constellation::min_distance() const {
    return std::abs(points.at(1) - points.at(0));
}

Constellation build_qam(int order) {
    if (order != 4 && order != 16 && order != 64) {
        fail_argument("build_qam: unsupported order " + std::to_string(order) + " (expected 4, 16 or 64)");
    }
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    const int bits_per_axis = static_cast<int>(std::lround(std::log2(static_cast<double>(side))));

    // Mean of a^2 + b^2 over a, b in {-(side-1), ..., side-1} step 2.
    const double mean_energy = 2.0 * (static_cast<double>(order) - 1.0) / 3.0;
    const double scale = 1.0 / std::sqrt(mean_energy);

    Constellation c;
    c.order = order;
    c.points.reserve(static_cast<std::size_t>(order));
    c.labels.reserve(static_cast<std::size_t>(order));
    for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
            const double re = static_cast<double>(2 * col - (side - 1)) * scale;
            const double im = static_cast<double>(2 * row - (side - 1)) * scale;
            c.points.emplace_back(re, im);
            c.labels.push_back((gray_encode(static_cast<std::uint32_t>(row)) << bits_per_axis) |
                               gray_encode(static_cast<std::uint32_t>(col)));
        }
    }
    return c;
}

OneHotMatrix encode_one_hot(std::span<const std::int32_t> indices, int order) {
    if (order <= 0) fail_argument("encode_one_hot: order must be positive");
    OneHotMatrix out(indices.size(), static_cast<std::size_t>(order));
    for (std::size_t n = 0; n < indices.size(); ++n) {
        const auto k = indices[n];
        if (k < 0 || k >= order) {
            fail_argument("encode_one_hot: index " + std::to_string(k) + " out of range for order " +
                          std::to_string(order));
        }
        out.at(n, static_cast<std::size_t>(k)) = 1;
    }
    return out;
}

IndexVec decode_one_hot(const OneHotMatrix& one_hot) {
    IndexVec out(one_hot.rows());
    for (std::size_t r = 0; r < one_hot.rows(); ++r) {
        std::int32_t hit = -1;
        for (std::size_t c = 0; c < one_hot.cols(); ++c) {
            if (one_hot.at(r, c) != 0) {
                if (hit >= 0) fail_argument("decode_one_hot: row " + std::to_string(r) + " has several ones");
                hit = static_cast<std::int32_t>(c);
            }
        }
        if (hit < 0) fail_argument("decode_one_hot: row " + std::to_string(r) + " is empty");
        out[r] = hit;
    }
    return out;
}

ComplexVec map_symbols(std::span<const std::int32_t> indices, const Constellation& c) {
    ComplexVec out;
    out.reserve(indices.size());
    for (const auto k : indices) {
        if (k < 0 || k >= c.order) {
            fail_argument("map_symbols: index " + std::to_string(k) + " out of range for order " +
                          std::to_string(c.order));
        }
        out.push_back(c.points[static_cast<std::size_t>(k)]);
    }
    return out;
}

ComplexVec add_dc_bias(std::span<const Complex> samples, double bias) {
    if (!(bias >= 0.0)) fail_argument("add_dc_bias: bias must be non-negative");
    ComplexVec out(samples.begin(), samples.end());
    for (auto& s : out) s += bias;
    return out;
}

SymbolFrame make_frame(std::span<const std::int32_t> indices, const Constellation& c) {
    SymbolFrame f;
    f.indices.assign(indices.begin(), indices.end());
    f.tx_samples = map_symbols(indices, c);
    f.one_hot = encode_one_hot(indices, c.order);
    return f;
}

}  // namespace fsolink

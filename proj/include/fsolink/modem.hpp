#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fsolink/common.hpp"

namespace fsolink {

// Square M-QAM alphabet, unit average energy, Gray labels.
// Point m sits at column (m % side), row (m / side) of the grid; both axes
// run from the most negative level to the most positive.
struct Constellation {
    int order = 0;
    ComplexVec points;
    std::vector<std::uint32_t> labels;

    [[nodiscard]] int side() const;
    [[nodiscard]] double min_distance() const;
};

// Row-major N x M binary matrix.
class OneHotMatrix {
public:
    OneHotMatrix() = default;
    OneHotMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::uint8_t at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::uint8_t& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    [[nodiscard]] std::span<const std::uint8_t> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    bool operator==(const OneHotMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

struct SymbolFrame {
    IndexVec indices;
    OneHotMatrix one_hot;
    ComplexVec tx_samples;
};

inline constexpr double kDefaultDcBias = 1.0;

Constellation build_qam(int order);

OneHotMatrix encode_one_hot(std::span<const std::int32_t> indices, int order);

// Inverse of encode_one_hot: column of the single 1 in each row.
IndexVec decode_one_hot(const OneHotMatrix& one_hot);

ComplexVec map_symbols(std::span<const std::int32_t> indices, const Constellation& c);

ComplexVec add_dc_bias(std::span<const Complex> samples, double bias = kDefaultDcBias);

SymbolFrame make_frame(std::span<const std::int32_t> indices, const Constellation& c);

std::uint32_t gray_encode(std::uint32_t v);

}  // namespace fsolink

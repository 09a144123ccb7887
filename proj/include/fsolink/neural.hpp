#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fsolink/common.hpp"
#include "fsolink/modem.hpp"
#include "fsolink/rng.hpp"

namespace fsolink {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    [[nodiscard]] double* data() { return data_.data(); }
    [[nodiscard]] const double* data() const { return data_.data(); }
    [[nodiscard]] std::span<double> values() { return data_; }
    [[nodiscard]] std::span<const double> values() const { return data_; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    // Changes the shape keeping the allocation; contents are unspecified.
    void reshape(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        data_.resize(rows * cols);
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    RealVec data_;
};

// Network batches are feature-major: a batch of K samples with F features is
// an F x K matrix, one column per sample. Logits and probabilities are M x K.

struct MlpParams {
    std::vector<int> layer_sizes;  // [2, n1, ..., nd, M]
    std::vector<Matrix> weights;   // weights[l] is layer_sizes[l+1] x layer_sizes[l]
    std::vector<RealVec> biases;   // biases[l] has layer_sizes[l+1] entries

    [[nodiscard]] std::size_t num_layers() const { return weights.size(); }
    [[nodiscard]] std::size_t num_parameters() const;
    // Zero-filled parameters of the same shape.
    [[nodiscard]] MlpParams zeros_like() const;
    [[nodiscard]] bool same_shape(const MlpParams& other) const;
    [[nodiscard]] std::uint64_t fingerprint() const;

    bool operator==(const MlpParams&) const = default;
};

// Gradients share the parameter layout.
using Gradients = MlpParams;

struct ForwardCache {
    std::vector<int> layer_sizes;
    std::size_t batch = 0;
    std::uint64_t params_fingerprint = 0;
    Matrix input;                      // 2 x K
    std::vector<Matrix> pre;           // pre-activation of every layer
    std::vector<Matrix> activations;   // ReLU output of every hidden layer
};

struct ForwardResult {
    Matrix logits;
    ForwardCache cache;
};

struct AdamState {
    MlpParams m;
    MlpParams v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 1e-3;

    bool operator==(const AdamState&) const = default;
};

inline constexpr double kLogClamp = 1e-12;

// He-normal weights (std sqrt(2 / fan_in)), zero biases.
MlpParams init_params(std::span<const int> layer_sizes, RandomStream& rng);

ForwardResult forward(const MlpParams& p, const Matrix& x);

// Same pass, reusing the buffers already held by `cache`. The logits are
// cache.pre.back().
void forward(const MlpParams& p, const Matrix& x, ForwardCache& cache);

// Logits only, without keeping intermediates. Processes the batch in chunks.
Matrix predict_logits(const MlpParams& p, const Matrix& x);

Matrix softmax(const Matrix& logits);
void softmax(const Matrix& logits, Matrix& out);

// Mean negative log-likelihood of the one-hot targets (rows = samples).
double cross_entropy(const Matrix& probs, const OneHotMatrix& one_hot);

Gradients backward(const MlpParams& p, const ForwardCache& cache, const Matrix& probs, const OneHotMatrix& one_hot);

struct BackwardWorkspace {
    Matrix delta;
    Matrix prev;
};

// Writes into `g`, which must already have the parameter shape.
void backward(const MlpParams& p, const ForwardCache& cache, const Matrix& probs, const OneHotMatrix& one_hot,
              Gradients& g, BackwardWorkspace& ws);

AdamState make_adam_state(const MlpParams& p, double learning_rate = 1e-3);

std::pair<MlpParams, AdamState> adam_step(MlpParams p, const Gradients& g, AdamState st);

// In-place variant used by the training loop.
void adam_step_inplace(MlpParams& p, const Gradients& g, AdamState& st);

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    // Parameters whose +/- step moves a hidden pre-activation across the
    // ReLU kink; a finite difference is not a derivative estimate there.
    std::size_t skipped_at_kinks = 0;
};

// Compares `analytic` against central differences of the loss evaluated in
// extended precision by an independent forward pass.
GradCheckReport grad_check_against(const MlpParams& p, const Matrix& x, const OneHotMatrix& one_hot,
                                   const Gradients& analytic, double step);

// Max relative error of backward() versus central differences.
double grad_check(const MlpParams& p, const Matrix& x, const OneHotMatrix& one_hot, double step = 1e-5);

// Column-wise argmax, lowest index on ties.
IndexVec argmax_columns(const Matrix& m);

}  // namespace fsolink

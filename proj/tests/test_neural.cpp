#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fsolink/neural.hpp"

using namespace fsolink;

namespace {

Matrix random_batch(std::size_t k, RandomStream& rng, double scale = 1.0) {
    Matrix x(2, k);
    for (auto& v : x.values()) v = rng.normal(0.0, scale);
    return x;
}

OneHotMatrix random_labels(std::size_t k, int m, RandomStream& rng) {
    IndexVec idx(k);
    for (auto& i : idx) i = rng.uniform_index(m);
    return encode_one_hot(idx, m);
}

// One-hot targets as an M x K probability matrix.
Matrix as_probs(const OneHotMatrix& oh) {
    Matrix p(oh.cols(), oh.rows());
    for (std::size_t k = 0; k < oh.rows(); ++k)
        for (std::size_t c = 0; c < oh.cols(); ++c) p(c, k) = oh.at(k, c);
    return p;
}

bool all_zero(const MlpParams& g) {
    for (const auto& w : g.weights)
        for (const double v : w.values())
            if (v != 0.0) return false;
    for (const auto& b : g.biases)
        for (const double v : b)
            if (v != 0.0) return false;
    return true;
}

}  // namespace

TEST_SUITE("neural") {

TEST_CASE("init shapes and scales") {
    RandomStream rng(1);
    const std::vector<int> sizes{2, 40, 40, 16};
    const MlpParams p = init_params(sizes, rng);
    REQUIRE(p.num_layers() == 3);
    CHECK(p.weights[0].rows() == 40);
    CHECK(p.weights[0].cols() == 2);
    CHECK(p.weights[1].rows() == 40);
    CHECK(p.weights[1].cols() == 40);
    CHECK(p.weights[2].rows() == 16);
    CHECK(p.weights[2].cols() == 40);
    for (const auto& b : p.biases)
        for (const double v : b) CHECK(v == 0.0);

    const auto w = p.weights[1].values();
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    double ss = 0.0;
    for (const double v : w) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(w.size() - 1));
    CHECK(std::abs(sd - std::sqrt(2.0 / 40.0)) < 0.1 * std::sqrt(2.0 / 40.0));
}

TEST_CASE("init rejects malformed layer lists") {
    RandomStream rng(1);
    CHECK_THROWS_AS(init_params(std::vector<int>{2, 16}, rng), std::invalid_argument);
    CHECK_THROWS_AS(init_params(std::vector<int>{3, 8, 16}, rng), std::invalid_argument);
    CHECK_THROWS_AS(init_params(std::vector<int>{2, 0, 16}, rng), std::invalid_argument);
}

TEST_CASE("zero parameters give zero logits") {
    RandomStream rng(2);
    MlpParams p = init_params(std::vector<int>{2, 5, 5, 4}, rng);
    p = p.zeros_like();
    const ForwardResult f = forward(p, random_batch(33, rng));
    for (const double v : f.logits.values()) CHECK(v == 0.0);
}

TEST_CASE("hand-set hidden layer") {
    RandomStream rng(3);
    MlpParams p = init_params(std::vector<int>{2, 4, 2}, rng);
    p.weights[0] = Matrix(4, 2);
    p.weights[0](0, 0) = 1.0;
    p.weights[0](1, 1) = 1.0;
    p.weights[0](2, 0) = -1.0;
    p.weights[0](3, 1) = -1.0;
    p.weights[1] = Matrix(2, 4);
    p.weights[1](0, 0) = 1.0;
    p.weights[1](0, 3) = 10.0;
    p.weights[1](1, 1) = 1.0;
    p.weights[1](1, 2) = 1.0;
    Matrix x(2, 1);
    x(0, 0) = 3.0;
    x(1, 0) = -2.0;
    const ForwardResult f = forward(p, x);
    const auto& a = f.cache.activations.at(0);
    CHECK(a(0, 0) == 3.0);
    CHECK(a(1, 0) == 0.0);
    CHECK(a(2, 0) == 0.0);
    CHECK(a(3, 0) == 2.0);
    CHECK(f.logits(0, 0) == 23.0);
    CHECK(f.logits(1, 0) == 0.0);
}

TEST_CASE("forward is deterministic and checks shapes") {
    RandomStream rng(4);
    const MlpParams p = init_params(std::vector<int>{2, 16, 16, 16}, rng);
    const Matrix x = random_batch(300, rng);
    CHECK(forward(p, x).logits == forward(p, x).logits);
    CHECK(predict_logits(p, x) == forward(p, x).logits);
    CHECK_THROWS_AS(forward(p, Matrix(3, 10)), std::invalid_argument);
}

TEST_CASE("softmax rows") {
    const Matrix uniform = softmax(Matrix(4, 3, 0.7));
    for (const double v : uniform.values()) CHECK(std::abs(v - 0.25) < 1e-15);
    const Matrix big = softmax(Matrix(4, 1, 1000.0));
    for (const double v : big.values()) CHECK(v == 0.25);

    RandomStream rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix z(16, 20);
        for (auto& v : z.values()) v = rng.normal(0.0, trial < 25 ? 3.0 : 1e3);
        const Matrix p = softmax(z);
        for (std::size_t k = 0; k < z.cols(); ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < z.rows(); ++c) {
                CHECK(p(c, k) >= 0.0);
                s += p(c, k);
            }
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
        const double shift = rng.normal(0.0, 50.0);
        Matrix zs = z;
        for (auto& v : zs.values()) v += shift;
        const Matrix ps = softmax(zs);
        if (trial < 25) {
            for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(ps.values()[i] - p.values()[i]) < 1e-12);
        }
    }

    Matrix bad(2, 1, 0.0);
    bad(1, 0) = std::nan("");
    CHECK_THROWS_AS(softmax(bad), std::invalid_argument);
}

TEST_CASE("cross entropy values") {
    const OneHotMatrix oh = encode_one_hot(std::vector<std::int32_t>{1, 0, 3}, 4);
    CHECK(cross_entropy(as_probs(oh), oh) == 0.0);

    const OneHotMatrix oh16 = encode_one_hot(std::vector<std::int32_t>{5, 9}, 16);
    CHECK(cross_entropy(Matrix(16, 2, 1.0 / 16.0), oh16) == doctest::Approx(std::log(16.0)).epsilon(1e-14));

    const OneHotMatrix oh2 = encode_one_hot(std::vector<std::int32_t>{0, 1}, 2);
    CHECK(cross_entropy(Matrix(2, 2, 0.5), oh2) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    Matrix hard(2, 1);
    hard(1, 0) = 1.0;
    const OneHotMatrix wrong = encode_one_hot(std::vector<std::int32_t>{0}, 2);
    CHECK(cross_entropy(hard, wrong) == doctest::Approx(-std::log(kLogClamp)));

    CHECK_THROWS_AS(cross_entropy(Matrix(3, 2, 0.5), oh2), std::invalid_argument);
}

TEST_CASE("cross entropy is non-negative") {
    RandomStream rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix z(8, 10);
        for (auto& v : z.values()) v = rng.normal(0.0, 4.0);
        CHECK(cross_entropy(softmax(z), random_labels(10, 8, rng)) >= 0.0);
    }
}

TEST_CASE("backward is stationary at the target") {
    RandomStream rng(7);
    const MlpParams p = init_params(std::vector<int>{2, 6, 4}, rng);
    const Matrix x = random_batch(12, rng);
    const ForwardResult f = forward(p, x);
    const OneHotMatrix oh = random_labels(12, 4, rng);
    CHECK(all_zero(backward(p, f.cache, as_probs(oh), oh)));
}

TEST_CASE("backward rejects a stale cache") {
    RandomStream rng(8);
    MlpParams p = init_params(std::vector<int>{2, 6, 4}, rng);
    const Matrix x = random_batch(12, rng);
    const ForwardResult f = forward(p, x);
    const OneHotMatrix oh = random_labels(12, 4, rng);
    const Matrix probs = softmax(f.logits);
    p.weights[0](0, 0) += 1.0;
    CHECK_THROWS_AS(backward(p, f.cache, probs, oh), std::invalid_argument);
}

TEST_CASE("gradient check on a small net") {
    RandomStream rng(9);
    const MlpParams p = init_params(std::vector<int>{2, 8, 16}, rng);
    const Matrix x = random_batch(32, rng);
    const OneHotMatrix oh = random_labels(32, 16, rng);
    CHECK(grad_check(p, x, oh, 1e-5) < 1e-5);
}

TEST_CASE("gradient check detects a corrupted entry") {
    RandomStream rng(10);
    const MlpParams p = init_params(std::vector<int>{2, 8, 16}, rng);
    const Matrix x = random_batch(32, rng);
    const OneHotMatrix oh = random_labels(32, 16, rng);
    const ForwardResult f = forward(p, x);
    Gradients g = backward(p, f.cache, softmax(f.logits), oh);
    // Largest entry, so the doubled value is well away from zero.
    auto w = g.weights[1].values();
    const auto it = std::max_element(w.begin(), w.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    *it *= 2.0;
    CHECK(grad_check_against(p, x, oh, g, 1e-5).max_relative_error > 0.3);
}

TEST_CASE("zero input with zero biases gives zero first-layer weight gradients") {
    RandomStream rng(11);
    const MlpParams p = init_params(std::vector<int>{2, 8, 4}, rng);
    const Matrix x(2, 16);
    const OneHotMatrix oh = random_labels(16, 4, rng);
    const ForwardResult f = forward(p, x);
    const Gradients g = backward(p, f.cache, softmax(f.logits), oh);
    for (const double v : g.weights[0].values()) CHECK(v == 0.0);
    const GradCheckReport r = grad_check_against(p, x, oh, g, 1e-5);
    CHECK(r.max_relative_error < 1e-5);
}

TEST_CASE("dead relu unit receives no gradient") {
    RandomStream rng(12);
    MlpParams p = init_params(std::vector<int>{2, 6, 6, 4}, rng);
    p.biases[0][2] = -1e3;
    const Matrix x = random_batch(40, rng);
    const OneHotMatrix oh = random_labels(40, 4, rng);
    const ForwardResult f = forward(p, x);
    const Gradients g = backward(p, f.cache, softmax(f.logits), oh);
    CHECK(g.weights[0](2, 0) == 0.0);
    CHECK(g.weights[0](2, 1) == 0.0);
    CHECK(g.biases[0][2] == 0.0);
    for (std::size_t o = 0; o < g.weights[1].rows(); ++o) CHECK(g.weights[1](o, 2) == 0.0);
}

TEST_CASE("adam fixed point and first step") {
    RandomStream rng(13);
    const MlpParams p = init_params(std::vector<int>{2, 8, 4}, rng);
    const auto [same, st0] = adam_step(p, p.zeros_like(), make_adam_state(p, 1e-3));
    CHECK(same == p);
    CHECK(st0.t == 1);

    Gradients g = p.zeros_like();
    for (auto& w : g.weights)
        for (auto& v : w.values()) v = rng.normal(0.0, 1.0);
    for (auto& b : g.biases)
        for (auto& v : b) v = rng.normal(0.0, 1.0);
    const double lr = 1e-3;
    const auto [moved, st1] = adam_step(p, g, make_adam_state(p, lr));
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
        for (std::size_t i = 0; i < p.weights[l].size(); ++i) {
            const double d = moved.weights[l].values()[i] - p.weights[l].values()[i];
            const double gi = g.weights[l].values()[i];
            CHECK(std::abs(std::abs(d) - lr) < 1e-6);
            CHECK((d < 0) == (gi > 0));
        }
        for (std::size_t i = 0; i < p.biases[l].size(); ++i) {
            const double d = moved.biases[l][i] - p.biases[l][i];
            CHECK(std::abs(std::abs(d) - lr) < 1e-6);
        }
    }
    for (const auto& v : st1.v.weights)
        for (const double x : v.values()) CHECK(x >= 0.0);

    const auto again = adam_step(p, g, make_adam_state(p, lr));
    CHECK(again.first == moved);
    CHECK(again.second == st1);

    CHECK_THROWS_AS(adam_step(p, init_params(std::vector<int>{2, 9, 4}, rng), make_adam_state(p)),
                    std::invalid_argument);
}

TEST_CASE("separable toy problem is learned within 500 steps") {
    RandomStream rng(14);
    const std::size_t n = 200;
    Matrix x(2, n);
    IndexVec labels(n);
    for (std::size_t k = 0; k < n; ++k) {
        labels[k] = static_cast<std::int32_t>(k % 2);
        const double cx = labels[k] == 0 ? -2.0 : 2.0;
        x(0, k) = cx + rng.normal(0.0, 0.5);
        x(1, k) = rng.normal(0.0, 0.5) + (labels[k] == 0 ? 1.0 : -1.0);
    }
    const OneHotMatrix oh = encode_one_hot(labels, 2);
    MlpParams p = init_params(std::vector<int>{2, 8, 2}, rng);
    AdamState st = make_adam_state(p, 1e-3);
    int reached = -1;
    for (int step = 0; step < 500 && reached < 0; ++step) {
        const ForwardResult f = forward(p, x);
        if (argmax_columns(f.logits) == labels) reached = step;
        const Gradients g = backward(p, f.cache, softmax(f.logits), oh);
        adam_step_inplace(p, g, st);
    }
    if (reached < 0 && argmax_columns(forward(p, x).logits) == labels) reached = 500;
    CHECK(reached >= 0);
}

TEST_CASE("argmax breaks ties toward the lowest row") {
    Matrix m(3, 2, 1.0);
    m(2, 1) = 2.0;
    CHECK(argmax_columns(m) == IndexVec{0, 2});
}

}

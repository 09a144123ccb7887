#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <cstring>
#include <random>

#include "fsolink/kernels.hpp"

using namespace fsolink;
using kernels::KernelTable;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Canonical 8-lane fused dot product, written out directly.
double canonical_dot(const double* a, const double* b, std::size_t n) {
    double p[8] = {};
    for (std::size_t j = 0; j < n; ++j) p[j % 8] = std::fma(a[j], b[j], p[j % 8]);
    return ((p[0] + p[4]) + (p[2] + p[6])) + ((p[1] + p[5]) + (p[3] + p[7]));
}

double canonical_sum(const double* a, std::size_t n) {
    double p[8] = {};
    for (std::size_t j = 0; j < n; ++j) p[j % 8] += a[j];
    return ((p[0] + p[4]) + (p[2] + p[6])) + ((p[1] + p[5]) + (p[3] + p[7]));
}

struct Shape {
    std::size_t n_out, n_in, batch;
};

std::vector<Shape> shapes() {
    std::vector<Shape> s = {{1, 1, 1},   {4, 2, 7},     {40, 2, 256},  {40, 40, 257},
                            {16, 40, 513}, {3, 5, 1031}, {64, 40, 2500}, {7, 9, 8}};
    std::mt19937_64 rng(77);
    for (int i = 0; i < 60; ++i) {
        s.push_back({1 + rng() % 48, 1 + rng() % 48, 1 + rng() % 1500});
    }
    return s;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar reference follows the documented operation order") {
    const KernelTable& k = kernels::scalar_table();
    std::mt19937_64 rng(1);
    for (const Shape& s : shapes()) {
        const auto w = random_vec(s.n_out * s.n_in, rng);
        const auto bias = random_vec(s.n_out, rng);
        const auto in = random_vec(s.n_in * s.batch, rng);
        const auto delta = random_vec(s.n_out * s.batch, rng);

        std::vector<double> out(s.n_out * s.batch), ref(s.n_out * s.batch);
        k.dense_forward(w.data(), bias.data(), in.data(), out.data(), s.n_out, s.n_in, s.batch);
        for (std::size_t o = 0; o < s.n_out; ++o) {
            for (std::size_t b = 0; b < s.batch; ++b) {
                double acc = bias[o];
                for (std::size_t i = 0; i < s.n_in; ++i) acc = std::fma(w[o * s.n_in + i], in[i * s.batch + b], acc);
                ref[o * s.batch + b] = acc;
            }
        }
        CHECK(same_bits(out, ref));

        std::vector<double> gin(s.n_in * s.batch), gref(s.n_in * s.batch);
        k.dense_backward_input(w.data(), delta.data(), gin.data(), s.n_out, s.n_in, s.batch);
        for (std::size_t i = 0; i < s.n_in; ++i) {
            for (std::size_t b = 0; b < s.batch; ++b) {
                double acc = 0.0;
                for (std::size_t o = 0; o < s.n_out; ++o) acc = std::fma(w[o * s.n_in + i], delta[o * s.batch + b], acc);
                gref[i * s.batch + b] = acc;
            }
        }
        CHECK(same_bits(gin, gref));

        std::vector<double> gw(s.n_out * s.n_in), gb(s.n_out), gwr(s.n_out * s.n_in), gbr(s.n_out);
        k.dense_backward_params(delta.data(), in.data(), gw.data(), gb.data(), s.n_out, s.n_in, s.batch);
        for (std::size_t o = 0; o < s.n_out; ++o) {
            for (std::size_t i = 0; i < s.n_in; ++i)
                gwr[o * s.n_in + i] = canonical_dot(delta.data() + o * s.batch, in.data() + i * s.batch, s.batch);
            gbr[o] = canonical_sum(delta.data() + o * s.batch, s.batch);
        }
        CHECK(same_bits(gw, gwr));
        CHECK(same_bits(gb, gbr));
    }
}

TEST_CASE("every table matches the scalar reference bit for bit") {
    const auto tables = kernels::available_tables();
    REQUIRE(!tables.empty());
    CHECK(tables.front() == &kernels::scalar_table());
    const KernelTable& ref = kernels::scalar_table();
    std::mt19937_64 rng(2);
    for (const KernelTable* t : tables) {
        CAPTURE(t->name);
        for (const Shape& s : shapes()) {
            CAPTURE(s.n_out);
            CAPTURE(s.n_in);
            CAPTURE(s.batch);
            const auto w = random_vec(s.n_out * s.n_in, rng);
            const auto bias = random_vec(s.n_out, rng);
            const auto in = random_vec(s.n_in * s.batch, rng);
            const auto delta = random_vec(s.n_out * s.batch, rng);

            std::vector<double> a(s.n_out * s.batch), b(s.n_out * s.batch);
            ref.dense_forward(w.data(), bias.data(), in.data(), a.data(), s.n_out, s.n_in, s.batch);
            t->dense_forward(w.data(), bias.data(), in.data(), b.data(), s.n_out, s.n_in, s.batch);
            CHECK(same_bits(a, b));

            std::vector<double> c(s.n_in * s.batch), d(s.n_in * s.batch);
            ref.dense_backward_input(w.data(), delta.data(), c.data(), s.n_out, s.n_in, s.batch);
            t->dense_backward_input(w.data(), delta.data(), d.data(), s.n_out, s.n_in, s.batch);
            CHECK(same_bits(c, d));

            std::vector<double> gw1(s.n_out * s.n_in), gb1(s.n_out), gw2(s.n_out * s.n_in), gb2(s.n_out);
            ref.dense_backward_params(delta.data(), in.data(), gw1.data(), gb1.data(), s.n_out, s.n_in, s.batch);
            t->dense_backward_params(delta.data(), in.data(), gw2.data(), gb2.data(), s.n_out, s.n_in, s.batch);
            CHECK(same_bits(gw1, gw2));
            CHECK(same_bits(gb1, gb2));

            auto z = in;
            z[0] = -0.0;
            if (z.size() > 1) z[1] = 0.0;
            std::vector<double> r1(z.size()), r2(z.size());
            ref.relu_forward(z.data(), r1.data(), z.size());
            t->relu_forward(z.data(), r2.data(), z.size());
            CHECK(same_bits(r1, r2));
            CHECK(!std::signbit(r1[0]));

            auto d1 = delta, d2 = delta;
            const std::size_t n = std::min(z.size(), d1.size());
            ref.relu_backward(z.data(), d1.data(), n);
            t->relu_backward(z.data(), d2.data(), n);
            CHECK(same_bits(d1, d2));
        }
    }
}

TEST_CASE("nearest point agrees across tables and with brute force") {
    const KernelTable& ref = kernels::scalar_table();
    std::mt19937_64 rng(3);
    for (const std::size_t m : {4u, 16u, 64u}) {
        const auto pre = random_vec(m, rng);
        const auto pim = random_vec(m, rng);
        for (const std::size_t n : {1u, 3u, 8u, 17u, 1000u}) {
            auto re = random_vec(n, rng, 1.5);
            auto im = random_vec(n, rng, 1.5);
            auto gain = random_vec(n, rng);
            for (auto& g : gain) g = std::exp(0.5 * g);
            // An exact tie between points 0 and 1 at unit gain.
            re[0] = 0.5 * (pre[0] + pre[1]);
            im[0] = 0.5 * (pim[0] + pim[1]);
            gain[0] = 1.0;
            std::vector<std::int32_t> expect(n);
            for (std::size_t k = 0; k < n; ++k) {
                int best = 0;
                double bd = INFINITY;
                for (std::size_t j = 0; j < m; ++j) {
                    const double dr = re[k] - gain[k] * pre[j];
                    const double di = im[k] - gain[k] * pim[j];
                    const double dist = dr * dr + di * di;
                    if (dist < bd) {
                        bd = dist;
                        best = static_cast<int>(j);
                    }
                }
                expect[k] = best;
            }
            for (const KernelTable* t : kernels::available_tables()) {
                CAPTURE(t->name);
                std::vector<std::int32_t> out(n, -1);
                t->nearest_point(re.data(), im.data(), gain.data(), pre.data(), pim.data(), m, n, out.data());
                std::vector<std::int32_t> r(n, -1);
                ref.nearest_point(re.data(), im.data(), gain.data(), pre.data(), pim.data(), m, n, r.data());
                CHECK(out == r);
                CHECK(out == expect);
            }
        }
    }
}

TEST_CASE("adam update agrees across tables") {
    std::mt19937_64 rng(4);
    for (const std::size_t n : {1u, 5u, 8u, 13u, 1681u}) {
        const auto g = random_vec(n, rng);
        const auto p0 = random_vec(n, rng);
        const auto m0 = random_vec(n, rng, 0.1);
        auto v0 = random_vec(n, rng, 0.1);
        for (auto& x : v0) x = x * x;
        const double c1 = 1.0 - std::pow(0.9, 7), c2 = 1.0 - std::pow(0.999, 7);
        auto p1 = p0, m1 = m0, vv1 = v0;
        kernels::scalar_table().adam_update(p1.data(), g.data(), m1.data(), vv1.data(), n, 0.9, 0.999, c1, c2, 1e-3, 1e-8);
        for (const KernelTable* t : kernels::available_tables()) {
            CAPTURE(t->name);
            auto p2 = p0, m2 = m0, vv2 = v0;
            t->adam_update(p2.data(), g.data(), m2.data(), vv2.data(), n, 0.9, 0.999, c1, c2, 1e-3, 1e-8);
            CHECK(same_bits(p1, p2));
            CHECK(same_bits(m1, m2));
            CHECK(same_bits(vv1, vv2));
        }
        // Independent evaluation of the documented update.
        for (std::size_t i = 0; i < n; ++i) {
            const double m = 0.9 * m0[i] + (1.0 - 0.9) * g[i];
            const double v = 0.999 * v0[i] + (1.0 - 0.999) * (g[i] * g[i]);
            const double p = p0[i] - 1e-3 * (m / c1) / (std::sqrt(v / c2) + 1e-8);
            CHECK(m1[i] == m);
            CHECK(vv1[i] == v);
            CHECK(p1[i] == p);
        }
    }
}

TEST_CASE("active table is one of the available ones") {
    const auto& a = kernels::active();
    bool found = false;
    for (const auto* t : kernels::available_tables()) found = found || t == &a;
    CHECK(found);
    MESSAGE("active kernels: " << a.name);
}

TEST_CASE("environment override selects the table") {
    const char* forced = std::getenv("FSOLINK_SIMD");
    if (forced == nullptr) return;
    const std::string want = forced;
    bool usable = false;
    for (const auto* t : kernels::available_tables()) usable = usable || t->name == want;
    if (usable) CHECK(kernels::active().name == want);
    else CHECK(kernels::active().name == "scalar");
}

}

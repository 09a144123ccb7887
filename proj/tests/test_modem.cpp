#include <doctest.h>

#include <bit>
#include <cmath>
#include <numeric>
#include <set>

#include "fsolink/modem.hpp"
#include "support/oracles.hpp"

using namespace fsolink;

TEST_SUITE("modem") {

TEST_CASE("qpsk points are (+-1 +-i)/sqrt2") {
    const Constellation c = build_qam(4);
    REQUIRE(c.points.size() == 4);
    for (const auto& p : c.points) {
        CHECK(std::abs(std::abs(p.real()) - 1.0 / std::sqrt(2.0)) < 1e-15);
        CHECK(std::abs(std::abs(p.imag()) - 1.0 / std::sqrt(2.0)) < 1e-15);
        CHECK(std::abs(std::norm(p) - 1.0) < 1e-15);
    }
}

TEST_CASE("16-QAM grid scaled by 1/sqrt10") {
    const Constellation c = build_qam(16);
    std::multiset<std::pair<long, long>> expected;
    double energy = 0.0;
    for (int a : {-3, -1, 1, 3}) {
        for (int b : {-3, -1, 1, 3}) {
            expected.insert({a, b});
            energy += a * a + b * b;
        }
    }
    CHECK(energy / 16.0 == doctest::Approx(10.0));
    std::multiset<std::pair<long, long>> got;
    for (const auto& p : c.points) {
        const double re = p.real() * std::sqrt(10.0);
        const double im = p.imag() * std::sqrt(10.0);
        CHECK(std::abs(re - std::round(re)) < 1e-12);
        CHECK(std::abs(im - std::round(im)) < 1e-12);
        got.insert({std::lround(re), std::lround(im)});
    }
    CHECK(got == expected);
}

TEST_CASE("unsupported orders are rejected") {
    for (int m : {0, 2, 5, 8, 32, 256}) CHECK_THROWS_AS(build_qam(m), std::invalid_argument);
}

TEST_CASE("unit average energy for every order") {
    for (int m : {4, 16, 64}) {
        const Constellation c = build_qam(m);
        double e = 0.0;
        for (const auto& p : c.points) e += std::norm(p);
        CHECK(std::abs(e / m - 1.0) < 1e-12);
    }
}

TEST_CASE("axis-adjacent labels differ in one bit") {
    for (int m : {4, 16, 64}) {
        const Constellation c = build_qam(m);
        const int side = c.side();
        CHECK(std::set<std::uint32_t>(c.labels.begin(), c.labels.end()).size() == static_cast<std::size_t>(m));
        // Neighbours are found geometrically rather than through the index layout.
        const double d = c.min_distance();
        int pairs = 0;
        for (int a = 0; a < m; ++a) {
            for (int b = a + 1; b < m; ++b) {
                if (std::abs(std::abs(c.points[a] - c.points[b]) - d) > 1e-12) continue;
                ++pairs;
                CHECK(std::popcount(c.labels[a] ^ c.labels[b]) == 1);
            }
        }
        CHECK(pairs == 2 * side * (side - 1));
    }
}

TEST_CASE("one-hot encoding") {
    const std::vector<std::int32_t> one{2};
    const OneHotMatrix a = encode_one_hot(one, 4);
    REQUIRE(a.rows() == 1);
    REQUIRE(a.cols() == 4);
    CHECK(a.at(0, 0) == 0);
    CHECK(a.at(0, 1) == 0);
    CHECK(a.at(0, 2) == 1);
    CHECK(a.at(0, 3) == 0);

    const std::vector<std::int32_t> two{0, 3};
    const OneHotMatrix b = encode_one_hot(two, 4);
    const std::vector<std::uint8_t> row0(b.row(0).begin(), b.row(0).end());
    const std::vector<std::uint8_t> row1(b.row(1).begin(), b.row(1).end());
    CHECK(row0 == std::vector<std::uint8_t>{1, 0, 0, 0});
    CHECK(row1 == std::vector<std::uint8_t>{0, 0, 0, 1});

    const std::vector<std::int32_t> bad{4};
    CHECK_THROWS_AS(encode_one_hot(bad, 4), std::invalid_argument);
    const std::vector<std::int32_t> neg{-1};
    CHECK_THROWS_AS(encode_one_hot(neg, 4), std::invalid_argument);
}

TEST_CASE("decode inverts encode exhaustively") {
    for (int m : {4, 16, 64}) {
        IndexVec all(m);
        std::iota(all.begin(), all.end(), 0);
        const OneHotMatrix oh = encode_one_hot(all, m);
        for (std::size_t r = 0; r < oh.rows(); ++r) {
            int ones = 0;
            for (std::size_t c = 0; c < oh.cols(); ++c) ones += oh.at(r, c);
            CHECK(ones == 1);
        }
        CHECK(decode_one_hot(oh) == all);
    }
}

TEST_CASE("map_symbols is a lookup") {
    const Constellation c = build_qam(16);
    for (std::int32_t k = 0; k < 16; ++k) {
        const std::vector<std::int32_t> idx{k};
        const ComplexVec s = map_symbols(idx, c);
        REQUIRE(s.size() == 1);
        CHECK(s[0] == c.points[k]);
    }
    CHECK(map_symbols(std::vector<std::int32_t>{}, c).empty());
    CHECK_THROWS_AS(map_symbols(std::vector<std::int32_t>{16}, c), std::invalid_argument);
}

TEST_CASE("zero-noise hard decision recovers every index") {
    for (int m : {4, 16, 64}) {
        const Constellation c = build_qam(m);
        IndexVec all(m);
        std::iota(all.begin(), all.end(), 0);
        const ComplexVec s = map_symbols(all, c);
        for (int k = 0; k < m; ++k) CHECK(oracle::nearest(s[k], 1.0, c.points) == k);
    }
}

TEST_CASE("dc bias is a real offset") {
    const ComplexVec a = add_dc_bias(ComplexVec{{0.0, 0.0}}, 1.0);
    CHECK(a[0] == Complex(1.0, 0.0));
    const ComplexVec b = add_dc_bias(ComplexVec{{-1.0, 2.0}}, 1.0);
    CHECK(b[0] == Complex(0.0, 2.0));
    const ComplexVec d = add_dc_bias(ComplexVec{{0.25, -0.5}});
    CHECK(d[0] == Complex(1.25, -0.5));
    CHECK_THROWS_AS(add_dc_bias(ComplexVec{{0.0, 0.0}}, -1.0), std::invalid_argument);
}

TEST_CASE("map and encode are pure") {
    const Constellation c = build_qam(64);
    IndexVec idx(1000);
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<std::int32_t>((k * 37) % 64);
    CHECK(map_symbols(idx, c) == map_symbols(idx, c));
    CHECK(encode_one_hot(idx, 64) == encode_one_hot(idx, 64));
    CHECK(build_qam(64).points == c.points);
}

}

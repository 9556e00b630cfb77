#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dvcseq/time_codec.hpp"

using namespace dvcseq;

namespace {
const TimeGrid kRel100{TimeMode::relative, 100};
}

TEST(EncodeTime, Boundaries) {
    EXPECT_EQ(encode_time(0, 320, kRel100), 0);
    EXPECT_EQ(encode_time(320, 320, kRel100), 99);
    EXPECT_EQ(encode_time(7.25, 7.25, kRel100), 99);
}

TEST(EncodeTime, RoundsToNearestGridPoint) {
    // 37.2 / 120 * 99 = 30.69
    EXPECT_EQ(encode_time(37.2, 120, kRel100), 31);
    // 60 / 120 * 99 = 49.5 rounds up
    EXPECT_EQ(encode_time(60, 120, kRel100), 50);
}

TEST(EncodeTime, ClampsOutsideVideo) {
    EXPECT_EQ(encode_time(-5, 120, kRel100), 0);
    EXPECT_EQ(encode_time(500, 120, kRel100), 99);
    EXPECT_EQ(encode_time(900, 120, TimeGrid{TimeMode::absolute, 500}), 499);
}

TEST(EncodeTime, AbsoluteFloorsToSeconds) {
    EXPECT_EQ(encode_time(37.2, 1000, TimeGrid{TimeMode::absolute, 500}), 37);
    EXPECT_EQ(encode_time(37.999, 1000, TimeGrid{TimeMode::absolute, 500}), 37);
}

TEST(EncodeTime, Errors) {
    EXPECT_THROW(encode_time(NAN, 10, kRel100), Error);
    EXPECT_THROW(encode_time(1, 0, kRel100), Error);
    EXPECT_THROW(encode_time(1, 10, TimeGrid{TimeMode::relative, 1}), Error);
}

TEST(DecodeTime, GridPoints) {
    EXPECT_DOUBLE_EQ(decode_time(99, 120, kRel100), 120.0);
    EXPECT_DOUBLE_EQ(decode_time(0, 120, kRel100), 0.0);
    EXPECT_NEAR(decode_time(31, 120, kRel100), 37.575757575757, 1e-9);
    EXPECT_DOUBLE_EQ(decode_time(42, 9999, TimeGrid{TimeMode::absolute, 500}), 42.0);
    EXPECT_THROW(decode_time(100, 120, kRel100), Error);
    EXPECT_THROW(decode_time(-1, 120, kRel100), Error);
}

TEST(TimeCodec, RandomizedBoundAndMonotonicity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dur(0.5, 5000);
    std::uniform_int_distribution<int> ns(2, 1000);
    for (int i = 0; i < 5000; ++i) {
        const double T = dur(rng);
        const TimeGrid g{TimeMode::relative, ns(rng)};
        std::uniform_real_distribution<double> ts(0, T);
        double a = ts(rng), b = ts(rng);
        if (a > b) std::swap(a, b);
        const auto ka = encode_time(a, T, g);
        const auto kb = encode_time(b, T, g);
        EXPECT_LE(ka, kb);
        const double bound = relative_quantization_bound(T, g.n) * (1 + 1e-12) + 1e-12 * T;
        EXPECT_LE(std::abs(decode_time(ka, T, g) - a), bound);
        std::uniform_int_distribution<int> ks(0, g.n - 1);
        const int k = ks(rng);
        EXPECT_EQ(encode_time(decode_time(k, T, g), T, g), k);
    }
}

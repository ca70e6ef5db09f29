/*
 * Copyright 2026 The flexid Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "flexid/errors.hpp"
#include "flexid/features.hpp"

namespace flexid {
namespace {

TEST(Features, HandComputedExample) {
    const std::vector<double> x{0, 2, -1, 0, 0};
    const auto f = extract_features(x);
    EXPECT_NEAR(f.mean, 0.2, 1e-12);
    // sum (x - 0.2)^2 = 0.04 + 3.24 + 1.44 + 0.04 + 0.04 = 4.8, / 4 = 1.2
    EXPECT_NEAR(f.stddev, std::sqrt(1.2), 1e-12);
    EXPECT_NEAR(f.stddev, 1.0954, 1e-4);
    EXPECT_EQ(f.min, -1);
    EXPECT_EQ(f.max, 2);
    EXPECT_EQ(f.zero_count, 3);
    EXPECT_EQ(f.minmax_distance, 1);
}

TEST(Features, AllZeroSample) {
    const std::vector<double> x(7, 0.0);
    const auto f = extract_features(x);
    EXPECT_EQ(f.mean, 0);
    EXPECT_EQ(f.stddev, 0);
    EXPECT_EQ(f.min, 0);
    EXPECT_EQ(f.max, 0);
    EXPECT_EQ(f.zero_count, 7);
    EXPECT_EQ(f.minmax_distance, 0);
}

TEST(Features, TiesUseFirstOccurrence) {
    const std::vector<double> x{5, -2, 5, -2};
    EXPECT_EQ(extract_features(x).minmax_distance, 1);
}

TEST(Features, TooShort) {
    EXPECT_THROW(extract_features(std::vector<double>{1.0}), SampleTooShort);
    EXPECT_THROW(extract_features(std::vector<double>{}), SampleTooShort);
}

TEST(Features, ZeroEpsilon) {
    const std::vector<double> x{1e-9, -1e-9, 3.0};
    EXPECT_EQ(extract_features(x).zero_count, 0);
    EXPECT_EQ(extract_features(x, 1e-6).zero_count, 2);
}

// Property: homogeneity and permutation behaviour against brute-force statistics.
TEST(Features, ScalingAndPermutationProperties) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 3.0);
    std::bernoulli_distribution zero(0.2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(2 + trial % 30);
        for (auto& v : x) v = zero(rng) ? 0.0 : nd(rng);
        const auto f = extract_features(x);

        double sum = 0.0;
        for (double v : x) sum += v;
        const double mean = sum / static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        EXPECT_NEAR(f.mean, mean, 1e-12);
        EXPECT_NEAR(f.stddev, std::sqrt(ss / static_cast<double>(x.size() - 1)), 1e-12);
        EXPECT_EQ(f.zero_count, static_cast<double>(std::count(x.begin(), x.end(), 0.0)));

        const double c = 2.5;
        auto scaled = x;
        for (auto& v : scaled) v *= c;
        const auto g = extract_features(scaled);
        EXPECT_NEAR(g.mean, c * f.mean, 1e-9);
        EXPECT_NEAR(g.stddev, c * f.stddev, 1e-9);
        EXPECT_NEAR(g.min, c * f.min, 1e-9);
        EXPECT_NEAR(g.max, c * f.max, 1e-9);
        EXPECT_EQ(g.zero_count, f.zero_count);
        EXPECT_EQ(g.minmax_distance, f.minmax_distance);

        auto perm = x;
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto p = extract_features(perm);
        EXPECT_NEAR(p.mean, f.mean, 1e-9);
        EXPECT_NEAR(p.stddev, f.stddev, 1e-9);
        EXPECT_EQ(p.min, f.min);
        EXPECT_EQ(p.max, f.max);
        EXPECT_EQ(p.zero_count, f.zero_count);
    }
}

TEST(Standardizer, TwoPointExample) {
    const std::vector<std::vector<double>> rows{{0.0, 1.0}, {2.0, 1.0}};
    const auto s = Standardizer::fit(rows);
    const auto a = s.apply(rows[0]);
    const auto b = s.apply(rows[1]);
    EXPECT_NEAR(a[0], -0.7071, 1e-4);
    EXPECT_NEAR(b[0], 0.7071, 1e-4);
    EXPECT_NEAR(a[0], -1.0 / std::sqrt(2.0), 1e-12);
    // Second feature has no spread: centered only and reported.
    EXPECT_FALSE(s.degenerate()[0]);
    EXPECT_TRUE(s.degenerate()[1]);
    EXPECT_EQ(a[1], 0.0);
    EXPECT_EQ(s.scale()[1], 1.0);
}

TEST(Standardizer, MeanMapsToZeroAndInverseRoundTrips) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(5.0, 4.0);
    std::vector<std::vector<double>> rows(40, std::vector<double>(kFeatureCount));
    for (auto& r : rows) {
        for (auto& v : r) v = nd(rng);
        r[4] = std::round(std::abs(r[4]));  // zero-count style feature
    }
    const auto s = Standardizer::fit(rows);
    for (double z : s.apply(s.mean())) EXPECT_NEAR(z, 0.0, 1e-12);
    for (const auto& r : rows) {
        const auto back = s.inverse(s.apply(r));
        for (std::size_t k = 0; k < r.size(); ++k) EXPECT_NEAR(back[k], r[k], 1e-9);
    }
    EXPECT_THROW(Standardizer::fit(std::span(rows).first(1)), DataError);
    EXPECT_THROW(s.apply(std::vector<double>{1.0}), DimensionError);
}

TEST(Standardizer, IdentityIsANoOp) {
    const auto s = Standardizer::identity(3);
    const std::vector<double> v{1.5, -2, 0};
    EXPECT_EQ(s.apply(v), v);
}

TEST(FeaturesCsv, RoundTrip) {
    std::vector<FeatureVector> v{extract_features(std::vector<double>{0, 2, -1, 0, 0}),
                                 extract_features(std::vector<double>{0.1, 0.30000000000000004, 7})};
    v[0].label = "FA";
    std::stringstream buf;
    write_features_csv(buf, v);
    EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "mu,sigma,min,max,n0,nminmax,label");
    const auto back = read_features_csv(buf);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].values(), v[0].values());
    EXPECT_EQ(back[1].values(), v[1].values());
    EXPECT_EQ(back[0].label, "FA");
    EXPECT_FALSE(back[1].label);
}

}  // namespace
}  // namespace flexid

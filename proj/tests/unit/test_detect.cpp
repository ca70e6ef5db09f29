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
#include <thread>

#include <gtest/gtest.h>

#include "flexid/detect.hpp"
#include "flexid/errors.hpp"

namespace flexid {
namespace {

std::vector<double> noisy(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> x(n);
    double level = 100.0;
    for (auto& v : x) {
        level += d(rng);
        v = level;
    }
    return x;
}

SpectralResidualParams small_sr() {
    SpectralResidualParams p;
    p.window = 64;
    return p;
}

TEST(Persistence, ScoreExamples) {
    const Calibration cal{50.0, 10};
    EXPECT_EQ(persistence_score(0.0, cal), 0.0);
    EXPECT_EQ(persistence_score(50.0, cal), 1.0);
    EXPECT_EQ(persistence_score(-50.0, cal), 1.0);
    EXPECT_EQ(persistence_score(500.0, cal), 1.0);
    const double s = persistence_score(0.16 * 50.0, cal);
    EXPECT_DOUBLE_EQ(s, 0.16);
    const std::vector<double> scores{0.0, s};
    EXPECT_EQ(flagged_indices(scores, 0.15), (std::vector<std::size_t>{1}));
    EXPECT_TRUE(flagged_indices(scores, 0.16).empty());
}

TEST(Persistence, RawScoreIsAbsoluteDelta) {
    PersistenceDetector d;
    EXPECT_EQ(d.history(), 1u);
    const std::vector<double> w{-3.5};
    EXPECT_EQ(d.raw_score(w), 3.5);
}

TEST(Calibration, MaxAbsoluteDeltaOfPrefix) {
    PersistenceDetector d;
    // Index 0 is the seed value and never scored.
    const std::vector<double> enc{1000.0, 1.0, -4.0, 2.0, 99.0};
    const auto cal = calibrate(d, enc, 4);
    EXPECT_EQ(cal.s_max, 4.0);
    EXPECT_EQ(cal.length, 4u);
}

TEST(Calibration, DegenerateInputs) {
    PersistenceDetector d;
    const std::vector<double> zeros(100, 0.0);
    EXPECT_THROW(calibrate(d, zeros, 50), CalibrationError);
    EXPECT_THROW(calibrate(d, zeros, 500), CalibrationError);
    EXPECT_THROW(Calibration{}.normalize(1.0), CalibrationError);
    EXPECT_THROW(StreamingDetector(d, Calibration{}), CalibrationError);
}

TEST(Calibration, ScoresNeverExceedOne) {
    PersistenceDetector d;
    const auto enc = delta_encode(noisy(5000, 3, 2.0));
    const auto cal = calibrate(d, enc, 1000);
    for (double s : score_series(d, enc, cal)) {
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(RunDetector, FlatSeriesHasNoEvents) {
    PersistenceDetector d;
    DeltaSeries flat(Timestamp{}, kDefaultStep, std::vector<double>(500, 0.0));
    EXPECT_TRUE(run_detector(flat, d, Calibration{3.0, 100}, 0.0).empty());
}

TEST(RunDetector, SingleLargeStepIsTheOnlyEvent) {
    // Noisy calibration prefix, then a flat stretch with one step of 2 s_max.
    PersistenceDetector d;
    auto raw = noisy(400, 11);
    raw.resize(1000, raw.back());
    const auto prefix = delta_encode(raw);
    const auto cal = calibrate(d, prefix, 400);
    const std::size_t k = 700;
    for (std::size_t i = k; i < raw.size(); ++i) raw[i] += 2.0 * cal.s_max;
    DeltaSeries series(Timestamp{}, kDefaultStep, delta_encode(raw));
    for (double tau = 0.0; tau < 1.0; tau += 0.05) {
        const auto events = run_detector(series, d, cal, tau);
        // Exhaustive oracle: the only non-zero post-prefix delta sits at k.
        ASSERT_EQ(events.size(), 1u) << "tau " << tau;
        EXPECT_EQ(events[0].index, k);
        EXPECT_EQ(events[0].score, 1.0);
        EXPECT_EQ(events[0].timestamp, series.timestamp(k));
        EXPECT_EQ(events[0].detector, "persistence");
    }
}

TEST(RunDetector, TauZeroFlagsEveryNoisyPoint) {
    PersistenceDetector d;
    DeltaSeries series(Timestamp{}, kDefaultStep, delta_encode(noisy(800, 5)));
    const auto cal = calibrate(d, series.encoded(), 200);
    EXPECT_EQ(run_detector(series, d, cal, 0.0).size(), 600u);
    EXPECT_THROW(run_detector(series, d, Calibration{1.0, 800}, 0.0), InsufficientHistory);
}

// Property: the flagged set shrinks as tau grows.
TEST(Thresholds, FlaggedSetsAreNested) {
    PersistenceDetector d;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto enc = delta_encode(noisy(1500, seed));
        const auto scores = score_series(d, enc, calibrate(d, enc, 300));
        for (double t1 = 0.0; t1 < 1.0; t1 += 0.1) {
            const auto a = flagged_indices(scores, t1, 300);
            const auto b = flagged_indices(scores, t1 + 0.05, 300);
            EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
        }
    }
}

TEST(Persistence, ShiftAndScaleEquivariance) {
    PersistenceDetector d;
    const auto raw = noisy(2000, 9);
    auto shifted = raw, scaled = raw;
    for (auto& v : shifted) v += 250.0;
    for (auto& v : scaled) v *= 3.0;
    const auto e0 = delta_encode(raw), e1 = delta_encode(shifted), e2 = delta_encode(scaled);
    const auto c0 = calibrate(d, e0, 500), c1 = calibrate(d, e1, 500), c2 = calibrate(d, e2, 500);
    EXPECT_NEAR(c2.s_max, 3.0 * c0.s_max, 1e-9 * c0.s_max);
    const auto s0 = score_series(d, e0, c0), s1 = score_series(d, e1, c1), s2 = score_series(d, e2, c2);
    for (std::size_t i = 1; i < raw.size(); ++i) {
        EXPECT_NEAR(d.raw_score(std::span(e2).subspan(i, 1)), 3.0 * d.raw_score(std::span(e0).subspan(i, 1)), 1e-9);
        EXPECT_NEAR(s1[i], s0[i], 1e-9);
        EXPECT_NEAR(s2[i], s0[i], 1e-9);
    }
}

TEST(SpectralResidual, ConstantWindowScoresZero) {
    SpectralResidualDetector d(small_sr());
    EXPECT_EQ(d.history(), 64u);
    const std::vector<double> constant(64, 3.0);
    EXPECT_NEAR(d.raw_score(constant), 0.0, 1e-12);
    const std::vector<double> zeros(64, 0.0);
    EXPECT_EQ(d.raw_score(zeros), 0.0);
}

TEST(SpectralResidual, FinalStepRaisesScore) {
    SpectralResidualDetector d(small_sr());
    auto w = delta_encode(noisy(64, 21));
    const double base = d.raw_score(w);
    w.back() += 40.0;
    EXPECT_GT(d.raw_score(w), base);
    EXPECT_EQ(d.raw_score(w), d.raw_score(w));
}

TEST(SpectralResidual, SaliencyCoversExtendedWindow) {
    SpectralResidualDetector d(small_sr());
    const auto w = delta_encode(noisy(64, 2));
    const auto sal = d.saliency(w);
    EXPECT_EQ(sal.size(), 64u + d.params().estimated_points);
    for (double v : sal) EXPECT_GE(v, 0.0);
}

TEST(SpectralResidual, ShortWindowThrows) {
    SpectralResidualDetector d(small_sr());
    const std::vector<double> w(10, 1.0);
    EXPECT_THROW(d.raw_score(w), InsufficientHistory);
}

TEST(SpectralResidual, SharedAcrossThreadsIsDeterministic) {
    SpectralResidualDetector d(small_sr());
    const auto enc = delta_encode(noisy(600, 4));
    const auto cal = calibrate(d, enc, 300);
    const auto a = score_series(d, enc, cal);
    std::vector<double> b;
    std::thread t([&] { b = score_series(d, enc, cal); });
    t.join();
    EXPECT_EQ(a, b);
}

TEST(StreamingDetector, MatchesBatchScoring) {
    for (const std::string kind : {"persistence", "spectral_residual"}) {
        DetectorConfig cfg;
        cfg.kind = kind;
        cfg.sr = small_sr();
        const auto det = make_detector(cfg);
        const auto enc = delta_encode(noisy(700, 8));
        const auto cal = calibrate(*det, enc, 200);
        const auto batch = score_series(*det, enc, cal);
        StreamingDetector stream(*det, cal);
        for (std::size_t i = 0; i < enc.size(); ++i) {
            const auto s = stream.push(enc[i]);
            if (i >= 200) {
                ASSERT_TRUE(s.has_value()) << kind << " " << i;
                EXPECT_EQ(*s, batch[i]) << kind << " " << i;
            }
        }
    }
}

TEST(MakeDetector, UnknownKindIsConfigError) {
    DetectorConfig cfg;
    cfg.kind = "arima";
    EXPECT_THROW(make_detector(cfg), ConfigError);
}

}  // namespace
}  // namespace flexid

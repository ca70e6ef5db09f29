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

#include <gtest/gtest.h>

#include "flexid/config.hpp"
#include "flexid/errors.hpp"

namespace flexid {
namespace {

TEST(Config, DefaultsMatchTheDocumentedValues) {
    const PipelineConfig c;
    EXPECT_EQ(c.detector.kind, "persistence");
    EXPECT_EQ(c.detector.tau, 0.16);
    EXPECT_EQ(c.detector.calibration_days, 10u);
    EXPECT_EQ(c.sampler.window, 36u);
    EXPECT_EQ(c.sampler.extension, 3u);
    EXPECT_EQ(c.evm.params.tailsize, 7u);
    EXPECT_EQ(c.evm.params.distance_multiplier, 0.9);
    EXPECT_EQ(c.evm.params.metric, DistanceMetric::kCanberra);
    EXPECT_EQ(c.io.gaps, GapPolicy::kReport);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, TextRoundTrip) {
    PipelineConfig c;
    c.detector.tau = 0.23;
    c.sampler.window = 30;
    c.evm.rho_grid = {0.5, 0.75, 0.999};
    c.evm.params.metric = DistanceMetric::kEuclidean;
    c.evaluation.fad.fp_penalty = FpPenalty::kLiteral;
    c.io.columns.load = "kw";
    c.io.gaps = GapPolicy::kHold;
    c.scenario.seed = 7;
    c.scenario.start = "2018-01-01T00:00:00Z";
    c.dataset.train_fraction = 0.8;
    const auto text = to_text(c);
    const auto back = parse_config(text);
    EXPECT_EQ(to_text(back), text);
    EXPECT_EQ(back.detector.tau, 0.23);
    EXPECT_EQ(back.evm.rho_grid, c.evm.rho_grid);
    EXPECT_EQ(back.evm.params, c.evm.params);
    EXPECT_EQ(back.io.columns.load, "kw");
    EXPECT_EQ(back.io.gaps, GapPolicy::kHold);
    EXPECT_EQ(back.scenario.start, c.scenario.start);
    EXPECT_EQ(back.scenario.seed, 7u);
}

TEST(Config, CommentsAndPartialDocuments) {
    const auto c = parse_config("# comment\nversion = 1\n\n[detector]\ntau = 0.3 ; inline\n[evm]\nrho_grid = 0.2, 0.4\n");
    EXPECT_EQ(c.detector.tau, 0.3);
    EXPECT_EQ(c.evm.rho_grid, (std::vector<double>{0.2, 0.4}));
    EXPECT_EQ(c.sampler.window, 36u);
}

TEST(Config, RejectsUnknownOrBadEntries) {
    EXPECT_THROW(parse_config("[detektor]\n"), ConfigError);
    EXPECT_THROW(parse_config("[detector]\nthreshold = 0.3\n"), ConfigError);
    EXPECT_THROW(parse_config("[detector]\ntau = high\n"), ConfigError);
    EXPECT_THROW(parse_config("[detector]\ntau = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config("[detector]\nkind = arima\n"), ConfigError);
    EXPECT_THROW(parse_config("[sampler]\nwindow = 4\nextension = 4\n"), ConfigError);
    EXPECT_THROW(parse_config("[evm]\nrho_grid = 0.5, 1.0\n"), ConfigError);
    EXPECT_THROW(parse_config("[io]\nfill_gaps = interpolate\n"), ConfigError);
    EXPECT_THROW(parse_config("version = 2\n"), ConfigError);
    EXPECT_THROW(parse_config("[detector\n"), ConfigError);
    EXPECT_THROW(parse_config("tau\n"), ConfigError);
    try {
        parse_config("version = 1\n[detector]\nbogus = 1\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_config("/nonexistent/flexid.ini"), ConfigError);
}

TEST(Config, Grids) {
    const auto rho = default_rho_grid();
    ASSERT_EQ(rho.size(), 93u);
    EXPECT_NEAR(rho.front(), 0.10, 1e-12);
    EXPECT_NEAR(rho[89], 0.99, 1e-12);
    EXPECT_EQ(rho.back(), 0.99999);
    EXPECT_TRUE(std::is_sorted(rho.begin(), rho.end()));
    const auto tau = EvaluationConfig{}.tau_grid();
    ASSERT_EQ(tau.size(), 101u);
    EXPECT_EQ(tau.front(), 0.0);
    EXPECT_NEAR(tau.back(), 1.0, 1e-12);
}

}  // namespace
}  // namespace flexid

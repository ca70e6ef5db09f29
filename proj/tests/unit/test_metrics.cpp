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
#include <set>

#include <gtest/gtest.h>

#include "flexid/errors.hpp"
#include "flexid/metrics.hpp"

namespace flexid {
namespace {

using Events = std::vector<EventWindow>;
using Indices = std::vector<std::size_t>;

// Straightforward per-point labeler used as an oracle: event windows win over
// rebound windows, rebound windows are ignored, everything else is normal.
struct OracleCounts {
    std::size_t tp = 0, fp = 0;
};

OracleCounts oracle_count(const Events& events, const std::vector<bool>& flagged, std::size_t first_index) {
    OracleCounts c;
    const std::size_t n = flagged.size();
    for (const auto& e : events) {
        bool hit = false;
        for (std::size_t i = std::max(first_index, e.start >= 2 ? e.start - 2 : 0); i <= e.end; ++i) hit |= flagged[i];
        c.tp += hit;
    }
    for (std::size_t i = first_index; i < n; ++i) {
        bool in_event = false, in_rebound = false;
        for (const auto& e : events) {
            const std::size_t lo = e.start >= 2 ? e.start - 2 : 0;
            in_event |= i >= lo && i <= e.end;
            in_rebound |= i > e.end && i <= e.end + 3 * (e.end - e.start + 1);
        }
        if (!in_event && !in_rebound && flagged[i]) ++c.fp;
    }
    return c;
}

double oracle_aucpr(const std::vector<double>& scores, const Events& events, std::size_t first_index) {
    std::set<double, std::greater<>> values(scores.begin() + static_cast<std::ptrdiff_t>(first_index), scores.end());
    double area = 0.0, r0 = 0.0, p0 = 1.0;
    for (double v : values) {
        std::vector<bool> flagged(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) flagged[i] = scores[i] >= v;
        const auto c = oracle_count(events, flagged, first_index);
        const double r = static_cast<double>(c.tp) / static_cast<double>(events.size());
        const double p = c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        area += (r - r0) * 0.5 * (p + p0);
        r0 = r;
        p0 = p;
    }
    return area;
}

Events random_events(std::size_t n, std::mt19937_64& rng) {
    Events ev;
    std::uniform_int_distribution<std::size_t> gap(3, 40), len(1, 12);
    std::size_t pos = gap(rng);
    while (true) {
        const std::size_t l = len(rng);
        if (pos + l >= n) break;
        ev.push_back({pos, pos + l - 1});
        pos += l + gap(rng);
    }
    return ev;
}

TEST(Windows, ExtendedAndReboundBounds) {
    const EventWindow e{10, 20};
    EXPECT_EQ(e.length(), 11u);
    EXPECT_EQ(e.extended_start(), 8u);
    EXPECT_EQ(e.rebound_end(), 53u);
    EXPECT_EQ((EventWindow{1, 1}).extended_start(), 0u);
}

TEST(LabelDetections, Examples) {
    const Events ev{{10, 20}};
    auto o = label_detections(ev, Indices{8}, 100);
    EXPECT_EQ(o.tp, 1u);
    EXPECT_EQ(o.first_detection[0], 8u);
    EXPECT_EQ(detection_delay(o, ev, kDefaultStep), 0.0);

    o = label_detections(ev, Indices{15, 12}, 100);
    EXPECT_EQ(o.tp, 1u);
    EXPECT_EQ(o.fp, 0u);
    EXPECT_EQ(o.first_detection[0], 12u);

    // Rebound runs through end + 33 for an 11-sample event.
    o = label_detections(ev, Indices{25, 53}, 100);
    EXPECT_EQ(o.tp, 0u);
    EXPECT_EQ(o.fn, 1u);
    EXPECT_EQ(o.fp, 0u);
    o = label_detections(ev, Indices{54}, 100);
    EXPECT_EQ(o.fp, 1u);
    // 100 points minus 13 event and 33 rebound points.
    EXPECT_EQ(o.fp + o.tn, 54u);
}

TEST(LabelDetections, EventWinsOverEarlierRebound) {
    const Events ev{{10, 20}, {30, 32}};
    const auto o = label_detections(ev, Indices{29}, 100);
    EXPECT_EQ(o.tp, 1u);
    EXPECT_EQ(o.first_detection[1], 29u);
}

TEST(LabelDetections, TruncatesReboundAndSkipsPrefix) {
    const Events ev{{40, 45}};
    const auto o = label_detections(ev, Indices{3, 5, 48}, 50, 4);
    EXPECT_EQ(o.fp, 1u);
    EXPECT_EQ(o.tn, 33u);  // 34 normal points in [4, 38) minus one FP
    EXPECT_EQ(o.tp + o.fn, 1u);
}

TEST(LabelDetections, Errors) {
    EXPECT_THROW(label_detections(Events{{10, 20}, {22, 25}}, Indices{}, 100), LabelError);
    EXPECT_THROW(label_detections(Events{{10, 200}}, Indices{}, 100), LabelError);
    EXPECT_THROW(label_detections(Events{{10, 20}}, Indices{100}, 100), LabelError);
    EXPECT_NO_THROW(label_detections(Events{{10, 20}, {23, 25}}, Indices{}, 100));
}

TEST(F1, PaperCounts) {
    const auto r = precision_recall(191, 498, 14);
    EXPECT_NEAR(r.precision, 0.2772, 5e-5);
    EXPECT_NEAR(r.recall, 0.9317, 5e-5);
    EXPECT_NEAR(r.f1, 0.4273, 5e-5);
    EXPECT_EQ(precision_recall(5, 0, 0).f1, 1.0);
    EXPECT_EQ(precision_recall(0, 0, 0).f1, 1.0);
    EXPECT_EQ(precision_recall(0, 3, 4).f1, 0.0);
}

TEST(Confusion, MacroF1IgnoresUnknownColumn) {
    Confusion c;
    for (int i = 0; i < 4; ++i) c.add("FA", std::string("FA"));
    c.add("FA", std::string("NO"));
    for (int i = 0; i < 5; ++i) c.add("NO", std::string("NO"));
    for (int i = 0; i < 3; ++i) c.add("MP", std::nullopt);
    const std::vector<std::string> known{"FA", "NO"};
    const double closed = c.macro_f1(known);
    // FA: P = 1, R = 0.8; NO: P = 5/6, R = 1.
    EXPECT_NEAR(closed, 0.5 * (2 * 0.8 / 1.8 + 2 * (5.0 / 6) / (11.0 / 6)), 1e-12);
    c.add("MP", std::string("NO"));
    EXPECT_LT(c.macro_f1(known), closed);
    EXPECT_EQ(c.count("MP", std::nullopt), 3u);
    EXPECT_EQ(c.total(), 14u);
    EXPECT_THROW(c.macro_f1({}), MetricError);
}

TEST(Aucpr, PerfectSeparationIsOne) {
    std::vector<double> scores(200, 0.1);
    const Events ev{{50, 55}, {120, 130}};
    scores[52] = 0.9;
    scores[125] = 0.8;
    EXPECT_DOUBLE_EQ(aucpr(scores, ev), 1.0);
    EXPECT_THROW(aucpr(scores, Events{}), MetricError);
}

// Property: matches a brute-force threshold enumeration.
TEST(Aucpr, MatchesBruteForce) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 200;
        const auto ev = random_events(n, rng);
        if (ev.empty()) continue;
        std::vector<double> scores(n);
        std::uniform_int_distribution<int> coarse(0, 20);
        std::uniform_real_distribution<double> fine(0.0, 1.0);
        for (auto& s : scores) s = trial % 2 ? coarse(rng) / 20.0 : fine(rng);
        const std::size_t first = trial % 3 == 0 ? 0 : 1;
        EXPECT_NEAR(aucpr(scores, ev, first), oracle_aucpr(scores, ev, first), 1e-9) << trial;
    }
}

// Monte-Carlo check against the analytic curve for label-independent scores.
// With uniform scores an event (3 points in its extended window) is hit above
// v with probability 1 - v^3 and a normal point with probability 1 - v, so
// recall r = 1 - v^3 and precision = E(1 + v + v^2) / (E(1 + v + v^2) + N).
TEST(Aucpr, RandomScoresMatchAnalyticCurve) {
    const std::size_t n = 20000, spacing = 100;
    const double e_count = static_cast<double>(n / spacing - 1);
    const double normal = e_count * 94.0;  // 3 event + 3 rebound points per block
    double expected = 0.0;
    const int steps = 200000;
    for (int k = 0; k < steps; ++k) {
        const double v = (k + 0.5) / steps;
        const double q = 1.0 + v + v * v;
        expected += e_count * q / (e_count * q + normal) * 3.0 * v * v / steps;
    }
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u;
    const int reps = 30;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        Events ev;
        for (std::size_t s = spacing; s + 1 < n; s += spacing) ev.push_back({s, s});
        std::vector<double> scores(n);
        for (auto& s : scores) s = u(rng);
        const double a = aucpr(scores, ev);
        sum += a;
        sum2 += a * a;
    }
    const double mean = sum / reps;
    const double sd = std::sqrt((sum2 / reps - mean * mean) * reps / (reps - 1));
    EXPECT_NEAR(mean, expected, 3.0 * sd / std::sqrt(double(reps)));
    // The curve sits near the event share of evaluated points.
    EXPECT_NEAR(expected, e_count / (e_count + normal), 0.02);
}

TEST(Delay, Examples) {
    const Events ev{{10, 20}, {40, 50}, {70, 80}};
    const auto o = label_detections(ev, Indices{11, 43}, 200);
    EXPECT_DOUBLE_EQ(detection_delay(o, ev, kDefaultStep), 10.0);
    const auto none = label_detections(ev, Indices{}, 200);
    EXPECT_THROW(detection_delay(none, ev, kDefaultStep), MetricError);
}

TEST(Fad, Examples) {
    const FadParams p;
    const EventWindow ten{0, 10};
    EXPECT_DOUBLE_EQ(tp_score(ten, 5, p), 0.5 * p.xi);
    EXPECT_EQ(tp_score(ten, 0, p), p.xi);
    EXPECT_EQ(tp_score(EventWindow{5, 5}, 5, p), p.xi);
    EXPECT_NEAR(fp_contribution(498, p), -24.29, 5e-3);

    const Events ev{{10, 20}, {40, 50}};
    const auto opt = fad_score(label_detections(ev, Indices{10, 38}, 200), ev, p);
    EXPECT_DOUBLE_EQ(opt.fad, 2.0 * p.xi);
    EXPECT_DOUBLE_EQ(opt.fad_norm, 1.0);
    const auto null = fad_score(label_detections(ev, Indices{}, 200), ev, p);
    EXPECT_DOUBLE_EQ(null.fad, -2.0 * p.eta);
    EXPECT_DOUBLE_EQ(null.fad_norm, 0.0);
}

TEST(Fad, LiteralModeNormalizesAgainstItsOwnReferences) {
    FadParams p;
    p.fp_penalty = FpPenalty::kLiteral;
    p.nu = 0.2;
    const Events ev{{10, 20}};
    const auto opt = fad_score(label_detections(ev, Indices{10}, 100), ev, p);
    EXPECT_NEAR(opt.fad, p.xi - p.gamma - p.nu, 1e-12);
    EXPECT_DOUBLE_EQ(opt.fad_norm, 1.0);
    EXPECT_EQ(parse_fp_penalty("literal"), FpPenalty::kLiteral);
    EXPECT_THROW(parse_fp_penalty("other"), ConfigError);
    p.gamma = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

// Property: monotonicity over randomized outcomes.
TEST(Fad, MonotonicityProperties) {
    std::mt19937_64 rng(8);
    const FadParams p;
    for (int trial = 0; trial < 300; ++trial) {
        const auto ev = random_events(400, rng);
        if (ev.empty()) continue;
        DetectionOutcome o;
        std::bernoulli_distribution hit(0.6);
        for (const auto& e : ev) {
            std::uniform_int_distribution<std::size_t> at(e.extended_start(), e.end);
            if (hit(rng)) {
                o.first_detection.push_back(at(rng));
                ++o.tp;
            } else {
                o.first_detection.push_back(std::nullopt);
                ++o.fn;
            }
        }
        o.fp = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
        const auto base = fad_score(o, ev, p);
        EXPECT_LE(base.fad_norm, 1.0);

        auto more_fp = o;
        ++more_fp.fp;
        EXPECT_LT(fad_score(more_fp, ev, p).fad, base.fad);

        for (std::size_t k = 0; k < ev.size(); ++k) {
            if (!o.first_detection[k]) continue;
            auto lost = o;
            lost.first_detection[k].reset();
            --lost.tp;
            ++lost.fn;
            EXPECT_LT(fad_score(lost, ev, p).fad, base.fad);
            if (*o.first_detection[k] > ev[k].extended_start()) {
                auto earlier = o;
                --*earlier.first_detection[k];
                EXPECT_GE(fad_score(earlier, ev, p).fad, base.fad);
            }
            break;
        }
        if (o.fp == 0) EXPECT_GE(base.fad_norm, 0.0);
    }
}

TEST(Openness, Values) {
    EXPECT_EQ(openness(2, 2, 2), 0.0);
    EXPECT_NEAR(openness(2, 3, 2), 0.1056, 5e-5);
    EXPECT_NEAR(openness(2, 4, 2), 0.1835, 5e-5);
    EXPECT_NEAR(openness(2, 5, 2), 0.2441, 5e-5);
    EXPECT_LT(openness(2, 3, 2), openness(2, 4, 2));
    EXPECT_THROW(openness(0, 2, 2), DomainError);
    EXPECT_THROW(openness(3, 2, 2), DomainError);
}

}  // namespace
}  // namespace flexid

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

#include "flexid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flexid/errors.hpp"

namespace flexid {

namespace {

constexpr int kNormal = -1;
constexpr int kRebound = -2;

// Role of every point: event index, kRebound or kNormal.
std::vector<int> point_roles(std::span<const EventWindow> events, std::size_t stream_length) {
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return events[a].start < events[b].start; });
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& e = events[order[k]];
        if (e.end < e.start || e.end >= stream_length) {
            throw LabelError("event [" + std::to_string(e.start) + ", " + std::to_string(e.end) +
                             "] does not fit a stream of " + std::to_string(stream_length));
        }
        if (k > 0 && e.extended_start() <= events[order[k - 1]].end) {
            throw LabelError("extended event windows overlap at index " + std::to_string(e.extended_start()));
        }
    }
    std::vector<int> roles(stream_length, kNormal);
    for (const auto& e : events) {
        const std::size_t last = std::min(e.rebound_end(), stream_length - 1);
        for (std::size_t i = e.end + 1; i <= last; ++i) roles[i] = kRebound;
    }
    for (std::size_t k = 0; k < events.size(); ++k) {
        for (std::size_t i = events[k].extended_start(); i <= events[k].end; ++i) roles[i] = static_cast<int>(k);
    }
    return roles;
}

}  // namespace

DetectionOutcome label_detections(std::span<const EventWindow> events, std::span<const std::size_t> detections,
                                  std::size_t stream_length, std::size_t first_index) {
    const auto roles = point_roles(events, stream_length);
    DetectionOutcome out;
    out.first_detection.assign(events.size(), std::nullopt);
    std::vector<std::size_t> sorted(detections.begin(), detections.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t d : sorted) {
        if (d >= stream_length) {
            throw LabelError("detection " + std::to_string(d) + " lies beyond the stream");
        }
        if (d < first_index) continue;
        const int role = roles[d];
        if (role >= 0) {
            auto& first = out.first_detection[static_cast<std::size_t>(role)];
            if (!first) first = d;
        } else if (role == kNormal) {
            ++out.fp;
        }
    }
    std::size_t normal = 0;
    for (std::size_t i = first_index; i < stream_length; ++i) {
        if (roles[i] == kNormal) ++normal;
    }
    out.tn = normal - out.fp;
    for (const auto& f : out.first_detection) {
        if (f) {
            ++out.tp;
        } else {
            ++out.fn;
        }
    }
    return out;
}

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) {
    PrecisionRecall r;
    r.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double denom = r.precision + r.recall;
    r.f1 = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
    return r;
}

PrecisionRecall binary_f1(const DetectionOutcome& outcome) { return precision_recall(outcome.tp, outcome.fp, outcome.fn); }

namespace {
const std::string kRejected = "\x01unknown";
}

void Confusion::add(const std::string& truth, const std::optional<std::string>& predicted) {
    ++counts_[{truth, predicted.value_or(kRejected)}];
    ++total_;
}

std::size_t Confusion::count(const std::string& truth, const std::optional<std::string>& predicted) const {
    const auto it = counts_.find({truth, predicted.value_or(kRejected)});
    return it == counts_.end() ? 0 : it->second;
}

PrecisionRecall Confusion::per_class(const std::string& label) const {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [key, n] : counts_) {
        const bool is_truth = key.first == label;
        const bool is_pred = key.second == label;
        if (is_truth && is_pred) {
            tp += n;
        } else if (is_pred) {
            fp += n;
        } else if (is_truth) {
            fn += n;
        }
    }
    return precision_recall(tp, fp, fn);
}

double Confusion::macro_f1(std::span<const std::string> known) const {
    if (known.empty()) throw MetricError("macro F1 needs at least one known class");
    double sum = 0.0;
    for (const auto& k : known) sum += per_class(k).f1;
    return sum / static_cast<double>(known.size());
}

double aucpr(std::span<const double> scores, std::span<const EventWindow> events, std::size_t first_index) {
    if (events.empty()) throw MetricError("AUCPR needs at least one event");
    const auto roles = point_roles(events, scores.size());

    // An event is detected at threshold tau iff its best in-window score > tau.
    std::vector<double> event_best(events.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> normal_scores;
    for (std::size_t i = first_index; i < scores.size(); ++i) {
        if (roles[i] >= 0) {
            auto& best = event_best[static_cast<std::size_t>(roles[i])];
            best = std::max(best, scores[i]);
        } else if (roles[i] == kNormal) {
            normal_scores.push_back(scores[i]);
        }
    }
    // Merge both lists in descending score order; each distinct value is one
    // operating point "flag every score >= value".
    struct Item {
        double score;
        bool is_event;
    };
    std::vector<Item> items;
    items.reserve(event_best.size() + normal_scores.size());
    for (double s : event_best) {
        if (std::isfinite(s)) items.push_back({s, true});
    }
    for (double s : normal_scores) items.push_back({s, false});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score > b.score; });

    const auto n_events = static_cast<double>(events.size());
    double area = 0.0;
    double prev_recall = 0.0, prev_precision = 1.0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < items.size();) {
        const double value = items[i].score;
        for (; i < items.size() && items[i].score == value; ++i) {
            if (items[i].is_event) {
                ++tp;
            } else {
                ++fp;
            }
        }
        const double recall = static_cast<double>(tp) / n_events;
        const double precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * 0.5 * (precision + prev_precision);
        prev_recall = recall;
        prev_precision = precision;
    }
    return area;
}

double detection_delay(const DetectionOutcome& outcome, std::span<const EventWindow> events, Duration step) {
    if (outcome.first_detection.size() != events.size()) {
        throw MetricError("outcome does not match the event list");
    }
    double total = 0.0;
    std::size_t detected = 0;
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (const auto& d = outcome.first_detection[k]) {
            const std::size_t late = *d > events[k].start ? *d - events[k].start : 0;
            total += static_cast<double>(late) * static_cast<double>(step.count()) / 60.0;
            ++detected;
        }
    }
    if (detected == 0) throw MetricError("detection delay is undefined without detected events");
    return total / static_cast<double>(detected);
}

const char* to_string(FpPenalty p) { return p == FpPenalty::kMarginal ? "marginal" : "literal"; }

FpPenalty parse_fp_penalty(std::string_view name) {
    if (name == "marginal") return FpPenalty::kMarginal;
    if (name == "literal") return FpPenalty::kLiteral;
    throw ConfigError("unknown FP penalty mode '" + std::string(name) + "'");
}

void FadParams::validate() const {
    if (!(xi > 0.0 && eta > 0.0 && gamma > 0.0 && upsilon > 0.0) || !(nu >= 0.0)) {
        throw ConfigError("FAD parameters need xi, eta, gamma, upsilon > 0 and nu >= 0");
    }
}

double tp_score(const EventWindow& event, std::size_t detection, const FadParams& params) {
    if (event.end == event.start || detection <= event.start) {
        return params.xi;
    }
    if (detection >= event.end) {
        return 0.0;
    }
    const double frac = static_cast<double>(event.end - detection) / static_cast<double>(event.end - event.start);
    return std::clamp(params.xi * frac, 0.0, params.xi);
}

double fp_contribution(std::size_t fp, const FadParams& params) {
    const double n = static_cast<double>(fp);
    if (params.fp_penalty == FpPenalty::kMarginal) {
        return -params.gamma * params.upsilon * -std::expm1(-n / params.upsilon);
    }
    return -(params.gamma * std::exp(-n / params.upsilon) + params.nu);
}

FadResult fad_score(const DetectionOutcome& outcome, std::span<const EventWindow> events, const FadParams& params) {
    params.validate();
    if (outcome.first_detection.size() != events.size()) {
        throw MetricError("outcome does not match the event list");
    }
    FadResult r;
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (const auto& d = outcome.first_detection[k]) {
            r.tp_contribution += tp_score(events[k], *d, params);
        }
    }
    const auto n = static_cast<double>(events.size());
    r.fn_contribution = -params.eta * static_cast<double>(outcome.fn);
    r.fp_contribution = fp_contribution(outcome.fp, params);
    r.fad = r.tp_contribution + r.fn_contribution + r.fp_contribution;
    // Reference scores with no false positives: nothing detected, and every
    // event detected at its start.
    r.fad_null = -params.eta * n + fp_contribution(0, params);
    r.fad_opt = params.xi * n + fp_contribution(0, params);
    r.fad_norm = r.fad_opt > r.fad_null ? (r.fad - r.fad_null) / (r.fad_opt - r.fad_null) : 0.0;
    return r;
}

double openness(std::size_t n_train_classes, std::size_t n_test_classes, std::size_t n_target_classes) {
    if (n_train_classes == 0 || n_test_classes == 0 || n_target_classes == 0) {
        throw DomainError("openness needs positive class counts");
    }
    const double arg = 2.0 * static_cast<double>(n_train_classes) /
                       static_cast<double>(n_test_classes + n_target_classes);
    if (arg > 1.0) {
        throw DomainError("openness undefined: more training classes than test and target classes");
    }
    return 1.0 - std::sqrt(arg);
}

}  // namespace flexid

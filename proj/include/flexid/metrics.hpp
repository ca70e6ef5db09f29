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

#ifndef FLEXID_METRICS_HPP_
#define FLEXID_METRICS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flexid/series.hpp"

namespace flexid {

inline constexpr std::size_t kEventLeadSamples = 2;
inline constexpr std::size_t kReboundFactor = 3;

/// Labeled activation [start, end] (inclusive sample indices).
struct EventWindow {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }
    /// Detection window starts two samples before the labeled start.
    std::size_t extended_start() const { return start >= kEventLeadSamples ? start - kEventLeadSamples : 0; }
    /// Rebound window is [end + 1, end + 3 * length()].
    std::size_t rebound_end() const { return end + kReboundFactor * length(); }
};

struct DetectionOutcome {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    /// First detection inside each event's extended window, per event.
    std::vector<std::optional<std::size_t>> first_detection;
};

/// Event-level TP/FN and point-level FP/TN. Detections inside rebound windows
/// are ignored; an extended event window takes precedence over an earlier
/// event's rebound window. Points before `first_index` are not evaluated and
/// rebound windows are truncated at the stream end. Throws LabelError when
/// extended event windows overlap or leave the stream.
DetectionOutcome label_detections(std::span<const EventWindow> events, std::span<const std::size_t> detections,
                                  std::size_t stream_length, std::size_t first_index = 0);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// 0/0 precision or recall counts as 1; F1 is 0 whenever precision + recall is 0.
PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn);
PrecisionRecall binary_f1(const DetectionOutcome& outcome);

/// Confusion counts between true labels and predictions (std::nullopt = rejected).
class Confusion {
  public:
    void add(const std::string& truth, const std::optional<std::string>& predicted);

    std::size_t count(const std::string& truth, const std::optional<std::string>& predicted) const;
    std::size_t total() const { return total_; }
    PrecisionRecall per_class(const std::string& label) const;
    /// Macro F1 over the given known classes only; unknown truths and
    /// rejections never count as true positives.
    double macro_f1(std::span<const std::string> known) const;

  private:
    std::map<std::pair<std::string, std::string>, std::size_t> counts_;
    std::size_t total_ = 0;
};

/// Area under the precision-recall curve obtained by sweeping the threshold
/// over every distinct score (flagged iff score > tau), anchored at
/// (recall 0, precision 1) and integrated with the trapezoid rule over recall.
/// Throws MetricError without events.
double aucpr(std::span<const double> scores, std::span<const EventWindow> events, std::size_t first_index = 0);

/// Mean delay over detected events in minutes; detections before the labeled
/// start count as zero delay. Throws MetricError when nothing was detected.
double detection_delay(const DetectionOutcome& outcome, std::span<const EventWindow> events, Duration step);

enum class FpPenalty { kMarginal, kLiteral };

const char* to_string(FpPenalty p);
FpPenalty parse_fp_penalty(std::string_view name);

struct FadParams {
    double xi = 1.0;
    double eta = 1.0;
    double gamma = 0.05;
    double upsilon = 10000.0;
    double nu = 0.0;
    FpPenalty fp_penalty = FpPenalty::kMarginal;

    void validate() const;
};

struct FadResult {
    double fad = 0.0;
    double fad_norm = 0.0;
    double tp_contribution = 0.0;
    double fn_contribution = 0.0;
    double fp_contribution = 0.0;
    double fad_null = 0.0;
    double fad_opt = 0.0;
};

/// Score of one detected event: xi at (or before) the start, declining
/// linearly to 0 at the end.
double tp_score(const EventWindow& event, std::size_t detection, const FadParams& params);
double fp_contribution(std::size_t fp, const FadParams& params);
FadResult fad_score(const DetectionOutcome& outcome, std::span<const EventWindow> events, const FadParams& params);

/// 1 - sqrt(2 * train / (test + target)). Throws DomainError for counts of
/// zero or a root argument above 1.
double openness(std::size_t n_train_classes, std::size_t n_test_classes, std::size_t n_target_classes);

}  // namespace flexid

#endif  // FLEXID_METRICS_HPP_

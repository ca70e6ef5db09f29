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

#ifndef FLEXID_PIPELINE_HPP_
#define FLEXID_PIPELINE_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flexid/config.hpp"
#include "flexid/detect.hpp"
#include "flexid/evm.hpp"
#include "flexid/sampler.hpp"

namespace flexid {

inline const std::string kActivationLabel = "FA";
inline const std::string kNormalLabel = "NO";

enum class Verdict { kFlexibilityActivation, kNormalBehavior, kUnknown };

const char* to_string(Verdict v);

struct SampleClassification {
    std::optional<std::string> label;  // std::nullopt = rejected as unknown
    double probability = 0.0;
    std::size_t first = 0;
    std::size_t last = 0;
    std::optional<std::size_t> early_stop;
};

struct IdentifiedEvent {
    std::size_t index = 0;
    Timestamp timestamp{};
    SampleClassification backward;
    SampleClassification forward;
    Verdict verdict = Verdict::kUnknown;
};

/// Activation if either sample is FA with probability >= rho, normal behavior
/// if both samples are NO, unknown otherwise.
Verdict fuse_verdict(const SampleClassification& backward, const SampleClassification& forward, double rho);

SampleClassification classify_sample(const EvmModel& model, const EventSample& sample, PredictMode mode,
                                     double zero_epsilon = 0.0);

using PipelineRecord = std::variant<DetectionEvent, IdentifiedEvent>;

/// One JSON object, no trailing newline.
std::string to_json_line(const PipelineRecord& record);

struct RunOptions {
    /// Without a model only detections are emitted.
    const EvmModel* model = nullptr;
    PredictMode mode = PredictMode::kOpen;
    /// Skips calibration on the stream prefix. The prefix of cal.length
    /// samples is still never flagged.
    std::optional<Calibration> calibration;
};

/// Push-based implementation of the detect / sample / classify loop. One
/// instance owns one stream. Records are emitted in a fixed order: at each
/// sample index, a detection comes first, then the events whose forward
/// sample completed at that index in detection order.
class StreamPipeline {
  public:
    StreamPipeline(const PipelineConfig& config, RunOptions options);
    ~StreamPipeline();
    StreamPipeline(const StreamPipeline&) = delete;
    StreamPipeline& operator=(const StreamPipeline&) = delete;

    /// Feeds one input row. Gaps are filled per config.io.gaps; with
    /// GapPolicy::kReport a gap throws DataError. Throws CalibrationError when
    /// the prefix cannot calibrate the detector.
    void push(Timestamp t, double value, std::vector<PipelineRecord>& out);

    /// Samples consumed so far, gap fills included.
    std::size_t size() const { return count_; }
    const std::optional<Calibration>& calibration() const { return cal_; }

  private:
    struct Pending {
        std::size_t t;
        std::size_t last;
        std::optional<std::size_t> early_stop;
        std::optional<SampleClassification> backward;
    };

    void consume(double raw, std::vector<PipelineRecord>& out);
    std::span<const double> buffer_span() const { return buffer_; }

    PipelineConfig config_;
    RunOptions options_;
    std::unique_ptr<Detector> detector_;
    std::size_t calibration_length_;
    SlotTracker slots_;
    std::optional<Calibration> cal_;
    std::unique_ptr<StreamingDetector> streaming_;
    std::vector<double> prefix_;
    // Trailing encoded samples; buffer_[k] is stream index base_ + k.
    std::vector<double> buffer_;
    std::size_t base_ = 0;
    std::vector<Pending> pending_;
    std::size_t count_ = 0;
    double last_raw_ = 0.0;
};

/// Batch counterpart of StreamPipeline. Produces the same records in the
/// same order; events whose samples run past the end are dropped in both.
std::vector<PipelineRecord> run_batch(const RawSeries& series, const PipelineConfig& config,
                                      const RunOptions& options);

/// Time-ordered splits in the style of an expanding-window time-series
/// cross-validation: fold k trains on the first (k + 1) * m rows and validates
/// on the next m, with m = n / (folds + 1).
struct TimeSeriesFold {
    std::size_t train_end = 0;  // exclusive
    std::size_t test_begin = 0;
    std::size_t test_end = 0;   // exclusive
};

/// Throws FoldError when a fold would be empty.
std::vector<TimeSeriesFold> time_series_folds(std::size_t n, std::size_t folds);

struct RhoScore {
    double rho = 0.0;
    double mean_f1 = 0.0;
};

struct TrainingReport {
    EvmModel model;
    double rho = 0.0;
    bool fallback = false;
    std::vector<RhoScore> cv;
    std::vector<std::string> warnings;
};

/// Cross-validated rho selection followed by a refit on the full training
/// set. `train` must be in time order. Throws FoldError when the data cannot
/// support the configured folds and NeedTwoClasses for single-class data.
TrainingReport train_evm(const PipelineConfig& config, std::span<const FeatureVector> train);

struct SweepRow {
    double tau = 0.0;
    DetectionOutcome outcome;
    PrecisionRecall pr;
    FadResult fad;
    std::optional<double> delay_min;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double aucpr = 0.0;
    double f1_max = 0.0;
    double tau_opt_f1 = 0.0;
    double fad_max = 0.0;  // normalized
    double tau_opt_fad = 0.0;
    std::optional<double> delay_at_opt_fad;
    std::size_t evaluated_points = 0;
};

/// Scores the series once, then evaluates every tau of the grid in parallel.
/// Points in the calibration prefix are not evaluated. Optima break ties
/// toward the smallest tau.
SweepReport sweep(const PipelineConfig& config, const RawSeries& series, std::span<const EventWindow> events,
                  std::span<const double> taus);

/// Per-tau CSV `tau,tp,fn,fp,tn,precision,recall,f1,fad,fad_norm,delay_min`.
void write_sweep_csv(std::ostream& out, const SweepReport& report);

struct OpennessLevel {
    std::vector<std::string> unknown_classes;
    double openness = 0.0;
    double open_f1 = 0.0;
    double closed_f1 = 0.0;
    std::size_t test_samples = 0;
};

struct OsCsReport {
    std::vector<OpennessLevel> levels;
    /// Share of FV test samples that open mode does not label FA.
    std::optional<double> fv_rejection;
    double rho = 0.0;
};

/// Openness ladder: the FA/NO test set, then MP, FV and DU added in turn.
/// F1 is macro-averaged over the known classes.
OsCsReport os_cs_experiment(const EvmModel& model, std::span<const FeatureVector> test);

}  // namespace flexid

#endif  // FLEXID_PIPELINE_HPP_

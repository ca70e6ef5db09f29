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

#ifndef FLEXID_DETECT_HPP_
#define FLEXID_DETECT_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flexid/series.hpp"

namespace flexid {

inline constexpr std::size_t kDefaultCalibrationLength = 10 * kSamplesPerDay;

/// Maps raw detector scores onto [0, 1]: score = min(1, raw / s_max), where
/// s_max is the largest raw score seen over the calibration prefix.
struct Calibration {
    double s_max = 0.0;
    std::size_t length = kDefaultCalibrationLength;

    bool valid() const { return s_max > 0.0; }
    /// Throws CalibrationError when the calibration is not valid.
    double normalize(double raw) const;
};

/// Point-anomaly detector over the delta-encoded stream. A detector scores the
/// most recent sample of a window holding exactly history() encoded samples.
/// Implementations are immutable and safe to share between threads.
class Detector {
  public:
    virtual ~Detector() = default;

    virtual std::string_view name() const = 0;
    virtual std::size_t history() const = 0;
    virtual double raw_score(std::span<const double> window) const = 0;

    double score(std::span<const double> window, const Calibration& cal) const {
        return cal.normalize(raw_score(window));
    }
};

/// Persistence forecast on delta-encoded data: the expected delta is zero, so
/// the raw score is |x_delta|. Stateless, O(1) per point.
class PersistenceDetector final : public Detector {
  public:
    std::string_view name() const override { return "persistence"; }
    std::size_t history() const override { return 1; }
    double raw_score(std::span<const double> window) const override;
};

double persistence_score(double delta, const Calibration& cal);

struct SpectralResidualParams {
    std::size_t window = 1440;
    std::size_t local_average = 21;
    std::size_t estimated_points = 5;
    /// Number of trailing points whose slopes are averaged for extrapolation.
    std::size_t slope_points = 5;
    /// Moving-average width applied to the log-amplitude spectrum.
    std::size_t filter = 3;
};

/// Spectral-residual saliency baseline. Scores the last real point of the
/// window after extending it with extrapolated points.
class SpectralResidualDetector final : public Detector {
  public:
    explicit SpectralResidualDetector(SpectralResidualParams params = {});

    std::string_view name() const override { return "spectral_residual"; }
    std::size_t history() const override { return params_.window; }
    double raw_score(std::span<const double> window) const override;

    /// Saliency map of the extended window (window + estimated points).
    std::vector<double> saliency(std::span<const double> window) const;

    const SpectralResidualParams& params() const { return params_; }

  private:
    struct Plans;
    SpectralResidualParams params_;
    std::shared_ptr<const Plans> plans_;
};

struct DetectorConfig {
    std::string kind = "persistence";
    double tau = 0.16;
    std::size_t calibration_days = 10;
    SpectralResidualParams sr;

    std::size_t calibration_length() const { return calibration_days * kSamplesPerDay; }
};

/// Throws ConfigError for an unknown kind.
std::unique_ptr<Detector> make_detector(const DetectorConfig& config);

/// s_max over indices [max(1, history-1), calibration_length) of `encoded`.
/// Index 0 holds the seed value and is never scored.
Calibration calibrate(const Detector& detector, std::span<const double> encoded,
                      std::size_t calibration_length = kDefaultCalibrationLength);

struct DetectionEvent {
    std::size_t index = 0;
    Timestamp timestamp{};
    double score = 0.0;
    double threshold = 0.0;
    std::string detector;
};

/// Normalized score of every point. Points inside the calibration prefix score 0.
std::vector<double> score_series(const Detector& detector, std::span<const double> encoded,
                                 const Calibration& cal);

/// One event per point after the calibration prefix whose score is strictly
/// greater than tau, in index order.
std::vector<DetectionEvent> run_detector(const DeltaSeries& series, const Detector& detector,
                                         const Calibration& cal, double tau);

/// Flags indices of `scores` (from first_index on) whose value exceeds tau.
std::vector<std::size_t> flagged_indices(std::span<const double> scores, double tau,
                                         std::size_t first_index = 0);

/// Stream owner for a detector: keeps the trailing window the detector needs.
class StreamingDetector {
  public:
    StreamingDetector(const Detector& detector, Calibration cal);

    /// Appends one encoded sample and returns its normalized score, or
    /// std::nullopt while the history is still filling.
    std::optional<double> push(double encoded_value);

    std::size_t count() const { return count_; }

  private:
    const Detector& detector_;
    Calibration cal_;
    std::vector<double> buffer_;
    std::size_t count_ = 0;
};

}  // namespace flexid

#endif  // FLEXID_DETECT_HPP_

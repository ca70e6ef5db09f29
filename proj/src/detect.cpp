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

#include "flexid/detect.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include "flexid/errors.hpp"

namespace flexid {

namespace {

// The FFTW planner is not re-entrant; execution of an existing plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr double kMagnitudeFloor = 1e-8;

std::size_t first_scorable(const Detector& detector) { return std::max<std::size_t>(1, detector.history() - 1); }

}  // namespace

double Calibration::normalize(double raw) const {
    if (!valid()) {
        throw CalibrationError("detector is not calibrated");
    }
    return std::min(1.0, raw / s_max);
}

double PersistenceDetector::raw_score(std::span<const double> window) const {
    return std::abs(window.back());
}

double persistence_score(double delta, const Calibration& cal) { return cal.normalize(std::abs(delta)); }

struct SpectralResidualDetector::Plans {
    explicit Plans(std::size_t n) : size(n) {
        std::vector<std::complex<double>> a(n), b(n);
        auto* in = reinterpret_cast<fftw_complex*>(a.data());
        auto* out = reinterpret_cast<fftw_complex*>(b.data());
        std::lock_guard lock(planner_mutex());
        forward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        backward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~Plans() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
    }
    Plans(const Plans&) = delete;
    Plans& operator=(const Plans&) = delete;

    std::size_t size;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

SpectralResidualDetector::SpectralResidualDetector(SpectralResidualParams params) : params_(params) {
    if (params_.window < 2 || params_.local_average == 0 || params_.filter == 0 ||
        params_.slope_points == 0 || params_.local_average >= params_.window ||
        params_.slope_points >= params_.window) {
        throw ConfigError("invalid spectral residual parameters");
    }
    plans_ = std::make_shared<const Plans>(params_.window + params_.estimated_points);
}

std::vector<double> SpectralResidualDetector::saliency(std::span<const double> window) const {
    if (window.size() < params_.window) {
        throw InsufficientHistory("spectral residual needs " + std::to_string(params_.window) +
                                  " samples, got " + std::to_string(window.size()));
    }
    window = window.last(params_.window);
    const std::size_t n_real = window.size();
    const std::size_t n = plans_->size;

    // Extrapolate with the mean slope between the last point and its predecessors.
    const double last = window.back();
    double slope = 0.0;
    for (std::size_t k = 1; k <= params_.slope_points; ++k) {
        slope += (last - window[n_real - 1 - k]) / static_cast<double>(k);
    }
    slope /= static_cast<double>(params_.slope_points);

    std::vector<std::complex<double>> buf(n), spec(n);
    for (std::size_t i = 0; i < n_real; ++i) {
        buf[i] = window[i];
    }
    for (std::size_t j = 1; j <= params_.estimated_points; ++j) {
        buf[n_real + j - 1] = last + slope * static_cast<double>(j);
    }
    fftw_execute_dft(plans_->forward, reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(spec.data()));

    std::vector<double> magnitude(n), log_magnitude(n);
    std::vector<bool> silent(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        magnitude[i] = std::abs(spec[i]);
        if (magnitude[i] <= kMagnitudeFloor) {
            silent[i] = true;
            magnitude[i] = kMagnitudeFloor;
            log_magnitude[i] = 0.0;
        } else {
            log_magnitude[i] = std::log(magnitude[i]);
        }
    }

    // Trailing moving average of width `filter` (shorter at the head).
    const std::size_t q = params_.filter;
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        running += log_magnitude[i];
        if (i >= q) {
            running -= log_magnitude[i - q];
        }
        const double avg = running / static_cast<double>(std::min(i + 1, q));
        if (silent[i]) {
            spec[i] = 0.0;
        } else {
            spec[i] *= std::exp(log_magnitude[i] - avg) / magnitude[i];
        }
    }

    fftw_execute_dft(plans_->backward, reinterpret_cast<fftw_complex*>(spec.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::abs(buf[i]) / static_cast<double>(n);
    }
    return out;
}

double SpectralResidualDetector::raw_score(std::span<const double> window) const {
    const auto sal = saliency(window);
    const std::size_t current = params_.window - 1;
    const std::size_t z = params_.local_average;
    double mean = 0.0;
    for (std::size_t i = current - z; i < current; ++i) {
        mean += sal[i];
    }
    mean /= static_cast<double>(z);
    if (mean <= 1e-12) {
        return 0.0;
    }
    return std::max(0.0, (sal[current] - mean) / mean);
}

std::unique_ptr<Detector> make_detector(const DetectorConfig& config) {
    if (config.kind == "persistence") {
        return std::make_unique<PersistenceDetector>();
    }
    if (config.kind == "spectral_residual") {
        return std::make_unique<SpectralResidualDetector>(config.sr);
    }
    throw ConfigError("unknown detector kind '" + config.kind + "'");
}

Calibration calibrate(const Detector& detector, std::span<const double> encoded,
                      std::size_t calibration_length) {
    if (encoded.size() < calibration_length) {
        throw CalibrationError("calibration needs " + std::to_string(calibration_length) +
                               " samples, got " + std::to_string(encoded.size()));
    }
    const std::size_t first = first_scorable(detector);
    if (calibration_length <= first) {
        throw InsufficientHistory("calibration prefix shorter than the detector history");
    }
    const std::size_t h = detector.history();
    double s_max = 0.0;
    for (std::size_t i = first; i < calibration_length; ++i) {
        const double raw = detector.raw_score(encoded.subspan(i + 1 - h, h));
        if (std::isfinite(raw)) {
            s_max = std::max(s_max, raw);
        }
    }
    if (!(s_max > 0.0)) {
        throw CalibrationError("calibration prefix produced no positive score");
    }
    return Calibration{s_max, calibration_length};
}

std::vector<double> score_series(const Detector& detector, std::span<const double> encoded,
                                 const Calibration& cal) {
    if (!cal.valid()) {
        throw CalibrationError("detector is not calibrated");
    }
    const std::size_t h = detector.history();
    const std::size_t first = std::max(cal.length, first_scorable(detector));
    std::vector<double> scores(encoded.size(), 0.0);
    for (std::size_t i = first; i < encoded.size(); ++i) {
        scores[i] = cal.normalize(detector.raw_score(encoded.subspan(i + 1 - h, h)));
    }
    return scores;
}

std::vector<std::size_t> flagged_indices(std::span<const double> scores, double tau, std::size_t first_index) {
    std::vector<std::size_t> out;
    for (std::size_t i = first_index; i < scores.size(); ++i) {
        if (scores[i] > tau) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<DetectionEvent> run_detector(const DeltaSeries& series, const Detector& detector,
                                         const Calibration& cal, double tau) {
    if (series.size() <= cal.length) {
        throw InsufficientHistory("series is not longer than the calibration window");
    }
    const auto scores = score_series(detector, series.encoded(), cal);
    std::vector<DetectionEvent> events;
    const std::string name(detector.name());
    for (std::size_t i : flagged_indices(scores, tau, cal.length)) {
        events.push_back(DetectionEvent{i, series.timestamp(i), scores[i], tau, name});
    }
    return events;
}

StreamingDetector::StreamingDetector(const Detector& detector, Calibration cal)
    : detector_(detector), cal_(cal) {
    if (!cal_.valid()) {
        throw CalibrationError("detector is not calibrated");
    }
    buffer_.reserve(2 * detector_.history() + 1);
}

std::optional<double> StreamingDetector::push(double encoded_value) {
    const std::size_t index = count_++;
    const std::size_t h = detector_.history();
    buffer_.push_back(encoded_value);
    if (buffer_.size() > 2 * h) {
        buffer_.erase(buffer_.begin(), buffer_.end() - static_cast<std::ptrdiff_t>(h));
    }
    if (index < first_scorable(detector_) || buffer_.size() < h) {
        return std::nullopt;
    }
    return detector_.score(std::span<const double>(buffer_).last(h), cal_);
}

}  // namespace flexid

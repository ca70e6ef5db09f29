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

#ifndef FLEXID_DATAGEN_HPP_
#define FLEXID_DATAGEN_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flexid/features.hpp"
#include "flexid/metrics.hpp"
#include "flexid/series.hpp"

namespace flexid {

enum class EventClass { kFA, kNO, kMP, kFV, kDU };

const char* to_string(EventClass c);
/// Throws DataError for unknown names.
EventClass parse_event_class(std::string_view name);

/// Synthetic aggregated-load scenario. Amplitudes are in kW.
struct ScenarioConfig {
    std::uint64_t seed = 42;
    std::size_t days = 195;
    std::string start = "2017-09-15T00:00:00Z";
    std::size_t households = 450;
    /// No events are placed in the first warmup_days (detector calibration).
    std::size_t warmup_days = 10;

    double mean_kw = 200.0;
    double daily_amplitude = 60.0;
    double weekend_damping = 0.10;
    double trend_per_day = 0.05;
    double noise_std = 6.0;

    std::size_t fa_count = 205;
    std::size_t mp_count = 15;
    std::size_t no_count = 205;
    std::size_t fv_count = 205;
    std::size_t du_count = 205;

    std::size_t fa_min_length = 6;   // 30 minutes
    std::size_t fa_max_length = 24;  // 120 minutes
    double fa_magnitude_min = 0.08;  // fraction of the current level
    double fa_magnitude_max = 0.20;
    double rebound_energy = 0.5;
    /// Every FA start delta exceeds start_delta_k * noise_std in magnitude.
    double start_delta_k = 5.0;

    double mp_amplitude_min = 30.0;
    double mp_amplitude_max = 60.0;
    std::size_t mp_min_length = 6;
    std::size_t mp_max_length = 12;

    double du_factor_min = 0.4;
    double du_factor_max = 0.8;

    /// Free samples kept around every placed event.
    std::size_t margin = 3;

    std::size_t length() const { return days * kSamplesPerDay; }
    /// Throws ConfigError.
    void validate() const;
};

struct TruthEvent {
    EventClass cls = EventClass::kFA;
    std::size_t start = 0;
    std::size_t end = 0;
    /// FA: signed step (kW), MP: peak amplitude (kW), FV: frozen value (kW),
    /// DU: availability factor, NO: 0.
    double param = 0.0;

    std::size_t length() const { return end - start + 1; }
};

using GroundTruth = std::vector<TruthEvent>;

struct Scenario {
    /// Measured load with FA activations and Monday peaks.
    RawSeries series;
    /// Same load with frozen-value and data-unavailability faults injected.
    RawSeries faulted;
    GroundTruth truth;
};

/// Deterministic for a fixed config. Throws PackingError when the events do not fit.
Scenario generate(const ScenarioConfig& config);

std::vector<EventWindow> event_windows(const GroundTruth& truth, EventClass cls = EventClass::kFA);

void write_truth_csv(std::ostream& out, const GroundTruth& truth);
GroundTruth read_truth_csv(std::istream& in);

struct ClassifierDataset {
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> test;
};

struct DatasetConfig {
    std::size_t margin = 3;
    double train_fraction = 0.9;
    /// Each unknown class contributes ceil(n_test_FA / unknown_divisor) test samples.
    std::size_t unknown_divisor = 3;
};

/// One sample per labeled event spanning [start - margin, end + margin] of the
/// delta-encoded series, featurized. FA and NO split in time order into
/// train/test; unknown classes only enter the test split.
ClassifierDataset build_classifier_dataset(const RawSeries& series, const GroundTruth& truth,
                                           const DatasetConfig& config = {});

}  // namespace flexid

#endif  // FLEXID_DATAGEN_HPP_

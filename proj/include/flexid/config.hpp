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

#ifndef FLEXID_CONFIG_HPP_
#define FLEXID_CONFIG_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flexid/datagen.hpp"
#include "flexid/detect.hpp"
#include "flexid/evm.hpp"
#include "flexid/metrics.hpp"
#include "flexid/sampler.hpp"
#include "flexid/series.hpp"

namespace flexid {

inline constexpr int kConfigVersion = 1;

struct EvmTrainingConfig {
    EvmParams params;
    /// Smallest rho whose mean cross-validated macro F1 reaches this value wins.
    double f1_requirement = 0.8;
    std::size_t folds = 5;
    /// When false the configured params.threshold is kept as is.
    bool select_threshold = true;
    /// Empty means default_rho_grid().
    std::vector<double> rho_grid;
};

/// 0.10, 0.11, ..., 0.99 followed by 0.999, 0.9999 and 0.99999.
std::vector<double> default_rho_grid();

struct EvaluationConfig {
    FadParams fad;
    double tau_min = 0.0;
    double tau_max = 1.0;
    double tau_step = 0.01;

    std::vector<double> tau_grid() const;
};

struct IoConfig {
    CsvColumns columns;
    GapPolicy gaps = GapPolicy::kReport;
};

/// Every tunable of the toolkit. Text form is an INI-like document:
///
///     version = 1
///     [detector]
///     kind = persistence
///     tau = 0.16
///
/// Unknown sections or keys are rejected so typos do not pass silently.
struct PipelineConfig {
    int version = kConfigVersion;
    DetectorConfig detector;
    SamplerConfig sampler;
    /// Deltas with |x| <= zero_epsilon count as zeros in the features.
    double zero_epsilon = 0.0;
    EvmTrainingConfig evm;
    EvaluationConfig evaluation;
    IoConfig io;
    ScenarioConfig scenario;
    DatasetConfig dataset;

    /// Throws ConfigError.
    void validate() const;
};

/// Throws ConfigError with the offending line number.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string to_text(const PipelineConfig& config);

}  // namespace flexid

#endif  // FLEXID_CONFIG_HPP_

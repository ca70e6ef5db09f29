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

#ifndef FLEXID_SAMPLER_HPP_
#define FLEXID_SAMPLER_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flexid {

struct SamplerConfig {
    std::size_t window = 36;  // w_x, 3 hours at 5-minute resolution
    std::size_t extension = 3;

    /// Throws ConfigError unless window > extension.
    void validate() const;
};

enum class Direction { kBackward, kForward };

const char* to_string(Direction d);

/// Delta-encoded slice cut around a detection at `origin`.
struct EventSample {
    std::vector<double> deltas;
    std::size_t origin = 0;
    /// Index of the first sample in the underlying stream.
    std::size_t first = 0;
    Direction direction = Direction::kBackward;
    /// Offset a of the detection that stopped forward sampling.
    std::optional<std::size_t> early_stop;
    std::optional<std::string> label;

    std::size_t last() const { return first + deltas.size() - 1; }
};

/// Span [t - w_x, t + e]. Throws BoundaryError when it does not fit.
EventSample sample_backward(std::span<const double> encoded, std::size_t t, const SamplerConfig& cfg);

/// Offset a in [1, w_x] of the first detection after t, if any.
/// `detections` must be sorted ascending.
std::optional<std::size_t> early_stop_offset(std::size_t t, const SamplerConfig& cfg,
                                             std::span<const std::size_t> detections);

/// Last index of the forward sample: t + min(a + e, w_x) after an early stop
/// at offset a, t + w_x otherwise. The cap keeps an early stop from ever
/// lengthening the sample.
std::size_t forward_last(std::size_t t, const SamplerConfig& cfg, std::optional<std::size_t> early_stop);

/// Span [t - e, t + a + e] when a detection at t + a stops sampling early,
/// otherwise [t - e, t + w_x]; see forward_last for the cap. `detections`
/// must be sorted ascending.
EventSample sample_forward(std::span<const double> encoded, std::size_t t, const SamplerConfig& cfg,
                           std::span<const std::size_t> detections);

}  // namespace flexid

#endif  // FLEXID_SAMPLER_HPP_

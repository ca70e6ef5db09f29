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

#include "flexid/sampler.hpp"

#include <algorithm>

#include "flexid/errors.hpp"

namespace flexid {

void SamplerConfig::validate() const {
    if (window <= extension) {
        throw ConfigError("sampler window must be larger than the extension");
    }
}

const char* to_string(Direction d) { return d == Direction::kBackward ? "backward" : "forward"; }

namespace {

EventSample slice(std::span<const double> encoded, std::size_t first, std::size_t last, std::size_t origin,
                  Direction direction) {
    EventSample s;
    s.deltas.assign(encoded.begin() + static_cast<std::ptrdiff_t>(first),
                    encoded.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    s.origin = origin;
    s.first = first;
    s.direction = direction;
    return s;
}

}  // namespace

EventSample sample_backward(std::span<const double> encoded, std::size_t t, const SamplerConfig& cfg) {
    if (t < cfg.window || t + cfg.extension >= encoded.size()) {
        throw BoundaryError("backward sample around " + std::to_string(t) + " leaves the series");
    }
    return slice(encoded, t - cfg.window, t + cfg.extension, t, Direction::kBackward);
}

std::optional<std::size_t> early_stop_offset(std::size_t t, const SamplerConfig& cfg,
                                             std::span<const std::size_t> detections) {
    const auto it = std::upper_bound(detections.begin(), detections.end(), t);
    if (it != detections.end() && *it <= t + cfg.window) {
        return *it - t;
    }
    return std::nullopt;
}

std::size_t forward_last(std::size_t t, const SamplerConfig& cfg, std::optional<std::size_t> early_stop) {
    return t + (early_stop ? std::min(*early_stop + cfg.extension, cfg.window) : cfg.window);
}

EventSample sample_forward(std::span<const double> encoded, std::size_t t, const SamplerConfig& cfg,
                           std::span<const std::size_t> detections) {
    const auto a = early_stop_offset(t, cfg, detections);
    const std::size_t last = forward_last(t, cfg, a);
    if (t < cfg.extension || last >= encoded.size()) {
        throw BoundaryError("forward sample around " + std::to_string(t) + " leaves the series");
    }
    auto s = slice(encoded, t - cfg.extension, last, t, Direction::kForward);
    s.early_stop = a;
    return s;
}

}  // namespace flexid

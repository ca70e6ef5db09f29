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

#ifndef FLEXID_FEATURES_HPP_
#define FLEXID_FEATURES_HPP_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flexid {

inline constexpr std::size_t kFeatureCount = 6;

/// Summary statistics of a delta-encoded event sample.
struct FeatureVector {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, divisor N - 1
    double min = 0.0;
    double max = 0.0;
    double zero_count = 0.0;
    double minmax_distance = 0.0;  // |argmin - argmax|, first occurrence wins ties
    std::optional<std::string> label;

    std::array<double, kFeatureCount> values() const {
        return {mean, stddev, min, max, zero_count, minmax_distance};
    }
    static FeatureVector from_values(std::span<const double> v, std::optional<std::string> label = {});
};

/// Throws SampleTooShort for fewer than two deltas. Deltas with
/// |x| <= zero_epsilon count as zero.
FeatureVector extract_features(std::span<const double> deltas, double zero_epsilon = 0.0);

/// Per-feature affine standardization fitted on training vectors.
class Standardizer {
  public:
    Standardizer() = default;
    Standardizer(std::vector<double> mean, std::vector<double> scale, std::vector<bool> degenerate);

    /// Sample mean and standard deviation (divisor N - 1). A feature without
    /// spread is only centered and reported through degenerate().
    /// Throws DataError for fewer than two rows.
    static Standardizer fit(std::span<const std::vector<double>> rows);
    static Standardizer identity(std::size_t dimension);

    std::vector<double> apply(std::span<const double> v) const;
    std::vector<double> inverse(std::span<const double> v) const;

    std::size_t dimension() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& scale() const { return scale_; }
    const std::vector<bool>& degenerate() const { return degenerate_; }

    bool operator==(const Standardizer&) const = default;

  private:
    std::vector<double> mean_;
    std::vector<double> scale_;
    std::vector<bool> degenerate_;
};

std::vector<std::vector<double>> feature_rows(std::span<const FeatureVector> vectors);

/// CSV rows `mu,sigma,min,max,n0,nminmax,label`.
void write_features_csv(std::ostream& out, std::span<const FeatureVector> vectors);
std::vector<FeatureVector> read_features_csv(std::istream& in);

}  // namespace flexid

#endif  // FLEXID_FEATURES_HPP_

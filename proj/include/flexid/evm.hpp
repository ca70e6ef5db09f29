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

#ifndef FLEXID_EVM_HPP_
#define FLEXID_EVM_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flexid/features.hpp"

namespace flexid {

enum class DistanceMetric { kCanberra, kCosine, kEuclidean };

const char* to_string(DistanceMetric m);
/// Throws ConfigError for unknown names.
DistanceMetric parse_distance_metric(std::string_view name);

/// Sum of |a_i - b_i| / (|a_i| + |b_i|); terms with a zero denominator add 0.
double canberra_distance(std::span<const double> a, std::span<const double> b);
double cosine_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);
double distance(DistanceMetric metric, std::span<const double> a, std::span<const double> b);

/// Two-parameter Weibull used as a radial inclusion function.
struct WeibullParams {
    double shape = 1.0;
    double scale = 1.0;

    /// Psi(d) = exp(-(d / scale)^shape).
    double inclusion(double d) const;
    bool operator==(const WeibullParams&) const = default;
};

struct WeibullFitOptions {
    double tolerance = 1e-9;
    int max_iterations = 100;
    /// Shape used when every sample is equal (including a single sample).
    double default_shape = 20.0;
};

/// Maximum-likelihood fit. The shape equation is solved by bracketed Newton
/// iteration, the scale follows in closed form. Throws FitError (point 0) when
/// the iteration does not converge and DataError for empty or negative input.
WeibullParams fit_weibull(std::span<const double> samples, const WeibullFitOptions& options = {});

double weibull_log_likelihood(std::span<const double> samples, const WeibullParams& params);

struct EvmParams {
    std::size_t tailsize = 7;
    double distance_multiplier = 0.9;
    DistanceMetric metric = DistanceMetric::kCanberra;
    double threshold = 0.9;  // rho
    double default_shape = 20.0;

    void validate() const;
    bool operator==(const EvmParams&) const = default;
};

struct LabeledPoint {
    std::vector<double> x;
    std::string label;
};

struct ExtremeVector {
    std::size_t id = 0;
    std::string label;
    std::vector<double> center;
    WeibullParams weibull;
    /// The `tailsize` smallest distances to other-class points, ascending and
    /// before the distance multiplier is applied.
    std::vector<double> tail;

    bool operator==(const ExtremeVector&) const = default;
};

enum class PredictMode { kOpen, kClosed };

struct Prediction {
    /// std::nullopt means the sample was rejected as unknown.
    std::optional<std::string> label;
    /// Per-class max inclusion probability, in class order.
    std::vector<double> probabilities;
    double max_probability = 0.0;

    bool unknown() const { return !label.has_value(); }
};

/// Extreme Value Machine over standardized feature vectors. Classes are kept
/// in lexicographic order; that order is the class id used for tie-breaking.
class EvmModel {
  public:
    EvmModel() = default;

    /// Points must already be in the model's feature space (see fit_features).
    static EvmModel fit(std::span<const LabeledPoint> train, const EvmParams& params,
                        Standardizer standardizer = {});
    /// Fits the standardizer on the raw features, then the model.
    static EvmModel fit_features(std::span<const FeatureVector> train, const EvmParams& params);

    /// Incremental learning. Existing extreme vectors stand in for the
    /// training set, so on an unreduced model the result matches a full refit.
    EvmModel update(std::span<const LabeledPoint> points) const;
    EvmModel update_features(std::span<const FeatureVector> train) const;

    /// Greedy per-class set cover keeping vectors that cover every discarded
    /// training point with inclusion probability >= coverage.
    EvmModel reduce(double coverage) const;

    /// `x` must already be standardized.
    Prediction predict(std::span<const double> x, PredictMode mode = PredictMode::kOpen) const;
    Prediction predict(std::span<const double> x, PredictMode mode, double threshold) const;
    /// Standardizes raw features with the attached standardizer first.
    Prediction classify(const FeatureVector& v, PredictMode mode = PredictMode::kOpen) const;
    Prediction classify(const FeatureVector& v, PredictMode mode, double threshold) const;

    bool fitted() const { return !vectors_.empty(); }
    const EvmParams& params() const { return params_; }
    void set_threshold(double rho);
    const Standardizer& standardizer() const { return standardizer_; }
    const std::vector<std::string>& classes() const { return classes_; }
    const std::vector<ExtremeVector>& vectors() const { return vectors_; }
    std::size_t size() const { return vectors_.size(); }

    std::string serialize() const;
    /// Throws ModelError on malformed documents.
    static EvmModel deserialize(std::string_view text);

    bool operator==(const EvmModel&) const = default;

  private:
    void refit_vector(ExtremeVector& v) const;
    void add_class(const std::string& label);

    EvmParams params_;
    Standardizer standardizer_;
    std::vector<std::string> classes_;
    std::vector<ExtremeVector> vectors_;
};

std::vector<LabeledPoint> standardize_features(const Standardizer& s, std::span<const FeatureVector> v);

}  // namespace flexid

#endif  // FLEXID_EVM_HPP_

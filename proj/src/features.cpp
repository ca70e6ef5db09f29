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

#include "flexid/features.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "flexid/errors.hpp"
#include "text_util.hpp"

namespace flexid {

FeatureVector FeatureVector::from_values(std::span<const double> v, std::optional<std::string> label) {
    if (v.size() != kFeatureCount) {
        throw DimensionError("feature vector needs " + std::to_string(kFeatureCount) + " values");
    }
    return FeatureVector{v[0], v[1], v[2], v[3], v[4], v[5], std::move(label)};
}

FeatureVector extract_features(std::span<const double> deltas, double zero_epsilon) {
    const std::size_t n = deltas.size();
    if (n < 2) {
        throw SampleTooShort("feature extraction needs at least 2 samples, got " + std::to_string(n));
    }
    double sum = 0.0;
    std::size_t argmin = 0, argmax = 0;
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += deltas[i];
        if (deltas[i] < deltas[argmin]) argmin = i;
        if (deltas[i] > deltas[argmax]) argmax = i;
        if (std::abs(deltas[i]) <= zero_epsilon) ++zeros;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : deltas) {
        ss += (x - mean) * (x - mean);
    }
    FeatureVector v;
    v.mean = mean;
    v.stddev = std::sqrt(ss / static_cast<double>(n - 1));
    v.min = deltas[argmin];
    v.max = deltas[argmax];
    v.zero_count = static_cast<double>(zeros);
    v.minmax_distance = static_cast<double>(argmin > argmax ? argmin - argmax : argmax - argmin);
    return v;
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> scale, std::vector<bool> degenerate)
    : mean_(std::move(mean)), scale_(std::move(scale)), degenerate_(std::move(degenerate)) {
    if (scale_.size() != mean_.size() || degenerate_.size() != mean_.size()) {
        throw DimensionError("standardizer statistics have mismatched sizes");
    }
}

Standardizer Standardizer::fit(std::span<const std::vector<double>> rows) {
    if (rows.size() < 2) {
        throw DataError("standardizer needs at least 2 training vectors");
    }
    const std::size_t d = rows.front().size();
    std::vector<double> mean(d, 0.0), scale(d, 0.0);
    std::vector<bool> degenerate(d, false);
    for (const auto& r : rows) {
        if (r.size() != d) {
            throw DimensionError("training vectors have mixed dimensions");
        }
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) scale[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
        scale[j] = std::sqrt(scale[j] / static_cast<double>(rows.size() - 1));
        if (!(scale[j] > 0.0)) {
            scale[j] = 1.0;
            degenerate[j] = true;
        }
    }
    return Standardizer(std::move(mean), std::move(scale), std::move(degenerate));
}

Standardizer Standardizer::identity(std::size_t dimension) {
    return Standardizer(std::vector<double>(dimension, 0.0), std::vector<double>(dimension, 1.0),
                        std::vector<bool>(dimension, false));
}

std::vector<double> Standardizer::apply(std::span<const double> v) const {
    if (v.size() != mean_.size()) {
        throw DimensionError("vector dimension does not match the standardizer");
    }
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = (v[j] - mean_[j]) / scale_[j];
    return out;
}

std::vector<double> Standardizer::inverse(std::span<const double> v) const {
    if (v.size() != mean_.size()) {
        throw DimensionError("vector dimension does not match the standardizer");
    }
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] * scale_[j] + mean_[j];
    return out;
}

std::vector<std::vector<double>> feature_rows(std::span<const FeatureVector> vectors) {
    std::vector<std::vector<double>> rows;
    rows.reserve(vectors.size());
    for (const auto& v : vectors) {
        const auto a = v.values();
        rows.emplace_back(a.begin(), a.end());
    }
    return rows;
}

void write_features_csv(std::ostream& out, std::span<const FeatureVector> vectors) {
    out << "mu,sigma,min,max,n0,nminmax,label\n";
    for (const auto& v : vectors) {
        for (double x : v.values()) {
            out << detail::format_double(x) << ',';
        }
        out << v.label.value_or("") << '\n';
    }
}

std::vector<FeatureVector> read_features_csv(std::istream& in) {
    std::vector<FeatureVector> out;
    std::string line;
    std::size_t row = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++row;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        if (header) {
            header = false;
            if (trimmed.rfind("mu,", 0) == 0) continue;
        }
        const auto fields = detail::split(trimmed, ',');
        if (fields.size() != kFeatureCount + 1) {
            throw ParseError(row, "expected 7 fields");
        }
        std::array<double, kFeatureCount> values{};
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const auto v = detail::parse_double(fields[j]);
            if (!v) throw ParseError(row, "bad number '" + std::string(fields[j]) + "'");
            values[j] = *v;
        }
        std::optional<std::string> label;
        if (!fields.back().empty()) label = std::string(fields.back());
        out.push_back(FeatureVector::from_values(values, std::move(label)));
    }
    return out;
}

}  // namespace flexid

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

#include "flexid/evm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "flexid/errors.hpp"
#include "text_util.hpp"

namespace flexid {

namespace {

// Distances below this are treated as this value inside Weibull fits.
constexpr double kMinDistance = 1e-12;

void check_dims(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("distance between vectors of dimension " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
}

}  // namespace

const char* to_string(DistanceMetric m) {
    switch (m) {
        case DistanceMetric::kCanberra: return "canberra";
        case DistanceMetric::kCosine: return "cosine";
        case DistanceMetric::kEuclidean: return "euclidean";
    }
    return "canberra";
}

DistanceMetric parse_distance_metric(std::string_view name) {
    if (name == "canberra") return DistanceMetric::kCanberra;
    if (name == "cosine") return DistanceMetric::kCosine;
    if (name == "euclidean") return DistanceMetric::kEuclidean;
    throw ConfigError("unknown distance metric '" + std::string(name) + "'");
}

double canberra_distance(std::span<const double> a, std::span<const double> b) {
    check_dims(a, b);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::abs(a[i]) + std::abs(b[i]);
        if (denom > 0.0) {
            d += std::abs(a[i] - b[i]) / denom;
        }
    }
    return d;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    check_dims(a, b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return na == nb ? 0.0 : 1.0;
    }
    return std::max(0.0, 1.0 - dot / std::sqrt(na * nb));
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    check_dims(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

double distance(DistanceMetric metric, std::span<const double> a, std::span<const double> b) {
    switch (metric) {
        case DistanceMetric::kCanberra: return canberra_distance(a, b);
        case DistanceMetric::kCosine: return cosine_distance(a, b);
        case DistanceMetric::kEuclidean: return euclidean_distance(a, b);
    }
    return canberra_distance(a, b);
}

double WeibullParams::inclusion(double d) const { return std::exp(-std::pow(std::max(d, 0.0) / scale, shape)); }

double weibull_log_likelihood(std::span<const double> samples, const WeibullParams& p) {
    double ll = 0.0;
    for (double x : samples) {
        const double z = x / p.scale;
        ll += std::log(p.shape / p.scale) + (p.shape - 1.0) * std::log(z) - std::pow(z, p.shape);
    }
    return ll;
}

WeibullParams fit_weibull(std::span<const double> samples, const WeibullFitOptions& options) {
    if (samples.empty()) {
        throw DataError("cannot fit a Weibull distribution to no samples");
    }
    double x_max = 0.0, x_min = std::numeric_limits<double>::infinity();
    for (double x : samples) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw DataError("Weibull samples must be finite and non-negative");
        }
        x_max = std::max(x_max, std::max(x, kMinDistance));
        x_min = std::min(x_min, std::max(x, kMinDistance));
    }
    if (samples.size() == 1 || x_min == x_max) {
        return WeibullParams{options.default_shape, x_max};
    }

    // Work on y = x / x_max in (0, 1] so y^k never overflows.
    const std::size_t n = samples.size();
    std::vector<double> log_y(n);
    double mean_log = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        log_y[i] = std::log(std::max(samples[i], kMinDistance) / x_max);
        mean_log += log_y[i];
    }
    mean_log /= static_cast<double>(n);

    // Profile score equation in the shape k and its derivative.
    auto residual = [&](double k, double* slope) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (double l : log_y) {
            const double w = std::exp(k * l);
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        const double ratio = s1 / s0;
        if (slope) {
            *slope = (s2 / s0 - ratio * ratio) + 1.0 / (k * k);
        }
        return ratio - 1.0 / k - mean_log;
    };

    double lo = 1e-2, hi = 1.0;
    while (residual(lo, nullptr) >= 0.0) {
        lo *= 0.5;
        if (lo < 1e-12) throw FitError(0, "cannot bracket the Weibull shape from below");
    }
    while (residual(hi, nullptr) <= 0.0) {
        lo = std::max(lo, hi);
        hi *= 2.0;
        if (hi > 1e12) throw FitError(0, "cannot bracket the Weibull shape from above");
    }

    double var = 0.0;
    for (double l : log_y) var += (l - mean_log) * (l - mean_log);
    var /= static_cast<double>(n - 1);
    double k = var > 0.0 ? 1.2825498 / std::sqrt(var) : 0.5 * (lo + hi);
    if (!(k > lo && k < hi)) k = 0.5 * (lo + hi);

    for (int it = 0; it < options.max_iterations; ++it) {
        double slope = 0.0;
        const double f = residual(k, &slope);
        if (std::abs(f) < options.tolerance) {
            double s0 = 0.0;
            for (double l : log_y) s0 += std::exp(k * l);
            const double scale = x_max * std::pow(s0 / static_cast<double>(n), 1.0 / k);
            return WeibullParams{k, scale};
        }
        if (f < 0.0) {
            lo = k;
        } else {
            hi = k;
        }
        double next = k - f / slope;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        k = next;
    }
    throw FitError(0, "Weibull shape iteration did not converge");
}

void EvmParams::validate() const {
    if (tailsize == 0) throw ConfigError("tailsize must be positive");
    if (!(distance_multiplier > 0.0)) throw ConfigError("distance multiplier must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (!(default_shape > 0.0)) throw ConfigError("default shape must be positive");
}

void EvmModel::refit_vector(ExtremeVector& v) const {
    std::vector<double> scaled(v.tail.size());
    for (std::size_t i = 0; i < v.tail.size(); ++i) {
        scaled[i] = params_.distance_multiplier * v.tail[i];
    }
    try {
        v.weibull = fit_weibull(scaled, WeibullFitOptions{1e-9, 100, params_.default_shape});
    } catch (const FitError& e) {
        throw FitError(v.id, e.what());
    }
}

void EvmModel::add_class(const std::string& label) {
    const auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
    if (it == classes_.end() || *it != label) {
        classes_.insert(it, label);
    }
}

std::vector<LabeledPoint> standardize_features(const Standardizer& s, std::span<const FeatureVector> v) {
    std::vector<LabeledPoint> out;
    out.reserve(v.size());
    for (const auto& f : v) {
        if (!f.label) throw DataError("training feature vector without label");
        const auto a = f.values();
        out.push_back(LabeledPoint{s.apply(a), *f.label});
    }
    return out;
}

EvmModel EvmModel::fit(std::span<const LabeledPoint> train, const EvmParams& params, Standardizer standardizer) {
    params.validate();
    if (train.empty()) {
        throw NeedTwoClasses("no training points");
    }
    const std::size_t dim = train.front().x.size();
    EvmModel model;
    model.params_ = params;
    model.standardizer_ = standardizer.dimension() == 0 ? Standardizer::identity(dim) : std::move(standardizer);
    if (model.standardizer_.dimension() != dim) {
        throw DimensionError("standardizer dimension does not match the training data");
    }
    for (const auto& p : train) {
        if (p.x.size() != dim) throw DimensionError("training points have mixed dimensions");
        if (p.label.empty() || p.label.find_first_of(" \t\n\r") != std::string::npos) {
            throw DataError("class labels must be non-empty and free of whitespace");
        }
        model.add_class(p.label);
    }
    if (model.classes_.size() < 2) {
        throw NeedTwoClasses("EVM training needs at least two classes");
    }
    // update() on an empty model performs a full fit.
    EvmModel empty = model;
    empty.classes_.clear();
    return empty.update(train);
}

EvmModel EvmModel::fit_features(std::span<const FeatureVector> train, const EvmParams& params) {
    const auto rows = feature_rows(train);
    auto standardizer = Standardizer::fit(rows);
    const auto points = standardize_features(standardizer, train);
    return fit(points, params, std::move(standardizer));
}

EvmModel EvmModel::update(std::span<const LabeledPoint> points) const {
    EvmModel out = *this;
    if (points.empty()) {
        return out;
    }
    const std::size_t dim = standardizer_.dimension();
    for (const auto& p : points) {
        if (p.x.size() != dim) throw DimensionError("update point dimension does not match the model");
        if (p.label.empty() || p.label.find_first_of(" \t\n\r") != std::string::npos) {
            throw DataError("class labels must be non-empty and free of whitespace");
        }
        out.add_class(p.label);
    }
    if (out.classes_.size() < 2) {
        throw NeedTwoClasses("EVM training needs at least two classes");
    }
    const std::size_t tailsize = params_.tailsize;

    // Existing vectors: merge new negative distances into their tails.
    for (auto& v : out.vectors_) {
        std::vector<double> merged = v.tail;
        for (const auto& p : points) {
            if (p.label != v.label) {
                merged.push_back(distance(params_.metric, v.center, p.x));
            }
        }
        if (merged.size() == v.tail.size()) continue;
        std::sort(merged.begin(), merged.end());
        merged.resize(std::min(merged.size(), tailsize));
        if (merged != v.tail) {
            v.tail = std::move(merged);
            out.refit_vector(v);
        }
    }

    // New points: tails against every other-class point, old and new.
    std::size_t next_id = 0;
    for (const auto& v : vectors_) next_id = std::max(next_id, v.id + 1);
    const std::size_t first_new = out.vectors_.size();
    for (const auto& p : points) {
        ExtremeVector v;
        v.id = next_id++;
        v.label = p.label;
        v.center = p.x;
        out.vectors_.push_back(std::move(v));
    }
    for (std::size_t i = first_new; i < out.vectors_.size(); ++i) {
        auto& v = out.vectors_[i];
        std::vector<double> dists;
        for (std::size_t j = 0; j < out.vectors_.size(); ++j) {
            if (out.vectors_[j].label != v.label) {
                dists.push_back(distance(params_.metric, v.center, out.vectors_[j].center));
            }
        }
        if (dists.empty()) {
            throw NeedTwoClasses("class '" + v.label + "' has no negative points");
        }
        std::sort(dists.begin(), dists.end());
        dists.resize(std::min(dists.size(), tailsize));
        v.tail = std::move(dists);
        out.refit_vector(v);
    }
    return out;
}

EvmModel EvmModel::update_features(std::span<const FeatureVector> train) const {
    return update(standardize_features(standardizer_, train));
}

EvmModel EvmModel::reduce(double coverage) const {
    if (!fitted()) throw ModelError("cannot reduce an unfitted model");
    EvmModel out = *this;
    out.vectors_.clear();
    std::vector<bool> keep(vectors_.size(), false);
    for (const auto& label : classes_) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < vectors_.size(); ++i) {
            if (vectors_[i].label == label) members.push_back(i);
        }
        const std::size_t m = members.size();
        // covers[a][b]: vector a covers training point b.
        std::vector<std::vector<bool>> covers(m, std::vector<bool>(m, false));
        for (std::size_t a = 0; a < m; ++a) {
            const auto& va = vectors_[members[a]];
            for (std::size_t b = 0; b < m; ++b) {
                const double d = distance(params_.metric, va.center, vectors_[members[b]].center);
                covers[a][b] = a == b || va.weibull.inclusion(d) >= coverage;
            }
        }
        std::vector<bool> covered(m, false);
        std::size_t remaining = m;
        while (remaining > 0) {
            std::size_t best = 0, best_gain = 0;
            for (std::size_t a = 0; a < m; ++a) {
                std::size_t gain = 0;
                for (std::size_t b = 0; b < m; ++b) {
                    if (!covered[b] && covers[a][b]) ++gain;
                }
                if (gain > best_gain) {
                    best = a;
                    best_gain = gain;
                }
            }
            keep[members[best]] = true;
            for (std::size_t b = 0; b < m; ++b) {
                if (!covered[b] && covers[best][b]) {
                    covered[b] = true;
                    --remaining;
                }
            }
        }
    }
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
        if (keep[i]) out.vectors_.push_back(vectors_[i]);
    }
    return out;
}

void EvmModel::set_threshold(double rho) {
    EvmParams p = params_;
    p.threshold = rho;
    p.validate();
    params_ = p;
}

Prediction EvmModel::predict(std::span<const double> x, PredictMode mode) const {
    return predict(x, mode, params_.threshold);
}

Prediction EvmModel::predict(std::span<const double> x, PredictMode mode, double threshold) const {
    if (!fitted()) throw ModelError("model is not fitted");
    Prediction p;
    p.probabilities.assign(classes_.size(), 0.0);
    for (const auto& v : vectors_) {
        const auto cls = static_cast<std::size_t>(
            std::lower_bound(classes_.begin(), classes_.end(), v.label) - classes_.begin());
        const double psi = v.weibull.inclusion(distance(params_.metric, v.center, x));
        p.probabilities[cls] = std::max(p.probabilities[cls], psi);
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes_.size(); ++c) {
        if (p.probabilities[c] > p.probabilities[best]) best = c;
    }
    p.max_probability = p.probabilities[best];
    if (mode == PredictMode::kClosed || p.max_probability >= threshold) {
        p.label = classes_[best];
    }
    return p;
}

Prediction EvmModel::classify(const FeatureVector& v, PredictMode mode) const {
    return classify(v, mode, params_.threshold);
}

Prediction EvmModel::classify(const FeatureVector& v, PredictMode mode, double threshold) const {
    const auto a = v.values();
    return predict(standardizer_.apply(a), mode, threshold);
}

namespace {

void write_row(std::ostream& out, std::span<const double> v) {
    for (double x : v) out << ' ' << detail::format_double(x);
}

class Tokens {
  public:
    explicit Tokens(std::string_view text) : in_(std::string(text)) {}

    std::string word() {
        std::string w;
        if (!(in_ >> w)) throw ModelError("model document ends early");
        return w;
    }
    void expect(std::string_view key) {
        const auto w = word();
        if (w != key) throw ModelError("model document: expected '" + std::string(key) + "', found '" + w + "'");
    }
    double number() {
        const auto w = word();
        const auto v = detail::parse_double(w);
        if (!v) throw ModelError("model document: bad number '" + w + "'");
        return *v;
    }
    std::size_t count() {
        const double v = number();
        if (v < 0 || v != std::floor(v)) throw ModelError("model document: bad count");
        return static_cast<std::size_t>(v);
    }
    std::vector<double> numbers(std::size_t n) {
        std::vector<double> out(n);
        for (auto& x : out) x = number();
        return out;
    }
    bool done() {
        std::string w;
        return !(in_ >> w);
    }

  private:
    std::istringstream in_;
};

}  // namespace

std::string EvmModel::serialize() const {
    std::ostringstream out;
    const std::size_t dim = standardizer_.dimension();
    out << "flexid-evm 1\n";
    out << "tailsize " << params_.tailsize << '\n';
    out << "distance_multiplier " << detail::format_double(params_.distance_multiplier) << '\n';
    out << "metric " << to_string(params_.metric) << '\n';
    out << "threshold " << detail::format_double(params_.threshold) << '\n';
    out << "default_shape " << detail::format_double(params_.default_shape) << '\n';
    out << "dimension " << dim << '\n';
    out << "standardizer_mean";
    write_row(out, standardizer_.mean());
    out << "\nstandardizer_scale";
    write_row(out, standardizer_.scale());
    out << "\nstandardizer_degenerate";
    for (bool b : standardizer_.degenerate()) out << ' ' << (b ? 1 : 0);
    out << "\nclasses " << classes_.size();
    for (const auto& c : classes_) out << ' ' << c;
    out << "\nvectors " << vectors_.size() << '\n';
    for (const auto& v : vectors_) {
        out << "vector " << v.id << ' ' << v.label << " shape " << detail::format_double(v.weibull.shape)
            << " scale " << detail::format_double(v.weibull.scale) << " center";
        write_row(out, v.center);
        out << " tail " << v.tail.size();
        write_row(out, v.tail);
        out << '\n';
    }
    out << "end\n";
    return out.str();
}

EvmModel EvmModel::deserialize(std::string_view text) {
    Tokens t(text);
    t.expect("flexid-evm");
    if (t.count() != 1) throw ModelError("unsupported model version");
    EvmModel m;
    t.expect("tailsize");
    m.params_.tailsize = t.count();
    t.expect("distance_multiplier");
    m.params_.distance_multiplier = t.number();
    t.expect("metric");
    try {
        m.params_.metric = parse_distance_metric(t.word());
    } catch (const ConfigError& e) {
        throw ModelError(e.what());
    }
    t.expect("threshold");
    m.params_.threshold = t.number();
    t.expect("default_shape");
    m.params_.default_shape = t.number();
    try {
        m.params_.validate();
    } catch (const ConfigError& e) {
        throw ModelError(std::string("model hyperparameters: ") + e.what());
    }
    t.expect("dimension");
    const std::size_t dim = t.count();
    t.expect("standardizer_mean");
    auto mean = t.numbers(dim);
    t.expect("standardizer_scale");
    auto scale = t.numbers(dim);
    t.expect("standardizer_degenerate");
    std::vector<bool> degenerate(dim);
    for (std::size_t i = 0; i < dim; ++i) degenerate[i] = t.count() != 0;
    m.standardizer_ = Standardizer(std::move(mean), std::move(scale), std::move(degenerate));
    t.expect("classes");
    const std::size_t n_classes = t.count();
    for (std::size_t i = 0; i < n_classes; ++i) m.classes_.push_back(t.word());
    if (!std::is_sorted(m.classes_.begin(), m.classes_.end())) throw ModelError("classes must be sorted");
    t.expect("vectors");
    const std::size_t n = t.count();
    for (std::size_t i = 0; i < n; ++i) {
        ExtremeVector v;
        t.expect("vector");
        v.id = t.count();
        v.label = t.word();
        if (!std::binary_search(m.classes_.begin(), m.classes_.end(), v.label)) {
            throw ModelError("vector of undeclared class '" + v.label + "'");
        }
        t.expect("shape");
        v.weibull.shape = t.number();
        t.expect("scale");
        v.weibull.scale = t.number();
        if (!(v.weibull.shape > 0.0) || !(v.weibull.scale > 0.0)) throw ModelError("non-positive Weibull parameter");
        t.expect("center");
        v.center = t.numbers(dim);
        t.expect("tail");
        v.tail = t.numbers(t.count());
        m.vectors_.push_back(std::move(v));
    }
    t.expect("end");
    if (!t.done()) throw ModelError("trailing content after model document");
    return m;
}

}  // namespace flexid

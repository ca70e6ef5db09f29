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

#include "flexid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "flexid/errors.hpp"
#include "flexid/features.hpp"
#include "text_util.hpp"

namespace flexid {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::kFlexibilityActivation: return "flexibility_activation";
        case Verdict::kNormalBehavior: return "normal_behavior";
        case Verdict::kUnknown: return "unknown";
    }
    return "unknown";
}

Verdict fuse_verdict(const SampleClassification& backward, const SampleClassification& forward, double rho) {
    const auto is_fa = [rho](const SampleClassification& s) {
        return s.label == kActivationLabel && s.probability >= rho;
    };
    if (is_fa(backward) || is_fa(forward)) return Verdict::kFlexibilityActivation;
    if (backward.label == kNormalLabel && forward.label == kNormalLabel) return Verdict::kNormalBehavior;
    return Verdict::kUnknown;
}

SampleClassification classify_sample(const EvmModel& model, const EventSample& sample, PredictMode mode,
                                     double zero_epsilon) {
    const auto prediction = model.classify(extract_features(sample.deltas, zero_epsilon), mode);
    SampleClassification c;
    c.label = prediction.label;
    c.probability = prediction.max_probability;
    c.first = sample.first;
    c.last = sample.last();
    c.early_stop = sample.early_stop;
    return c;
}

namespace {

using nlohmann::ordered_json;

ordered_json sample_json(const SampleClassification& s) {
    ordered_json j;
    j["label"] = s.label ? ordered_json(*s.label) : ordered_json(nullptr);
    j["probability"] = s.probability;
    j["first"] = s.first;
    j["last"] = s.last;
    j["early_stop"] = s.early_stop ? ordered_json(*s.early_stop) : ordered_json(nullptr);
    return j;
}

}  // namespace

std::string to_json_line(const PipelineRecord& record) {
    ordered_json j;
    if (const auto* d = std::get_if<DetectionEvent>(&record)) {
        j["type"] = "detection";
        j["index"] = d->index;
        j["timestamp"] = format_timestamp(d->timestamp);
        j["score"] = d->score;
        j["threshold"] = d->threshold;
        j["detector"] = d->detector;
    } else {
        const auto& e = std::get<IdentifiedEvent>(record);
        j["type"] = "identified";
        j["index"] = e.index;
        j["timestamp"] = format_timestamp(e.timestamp);
        j["verdict"] = to_string(e.verdict);
        j["backward"] = sample_json(e.backward);
        j["forward"] = sample_json(e.forward);
    }
    return j.dump();
}

// ---------------------------------------------------------------------------
// Streaming

StreamPipeline::StreamPipeline(const PipelineConfig& config, RunOptions options)
    : config_(config),
      options_(std::move(options)),
      detector_(make_detector(config.detector)),
      calibration_length_(options_.calibration ? options_.calibration->length
                                               : config.detector.calibration_length()),
      cal_(options_.calibration) {
    config_.sampler.validate();
    if (calibration_length_ == 0) throw ConfigError("calibration length must be positive");
}

StreamPipeline::~StreamPipeline() = default;

void StreamPipeline::push(Timestamp t, double value, std::vector<PipelineRecord>& out) {
    const std::size_t advance = slots_.advance(t);
    if (advance > 1) {
        if (config_.io.gaps == GapPolicy::kReport) {
            throw DataError(std::to_string(advance - 1) + " missing samples before " + format_timestamp(t));
        }
        for (std::size_t k = 1; k < advance; ++k) consume(last_raw_, out);
    }
    consume(value, out);
}

void StreamPipeline::consume(double raw, std::vector<PipelineRecord>& out) {
    const std::size_t i = count_++;
    const double encoded = i == 0 ? raw : raw - last_raw_;
    last_raw_ = raw;
    buffer_.push_back(encoded);

    if (!streaming_) {
        prefix_.push_back(encoded);
        if (prefix_.size() == calibration_length_) {
            if (!cal_) cal_ = calibrate(*detector_, prefix_, calibration_length_);
            streaming_ = std::make_unique<StreamingDetector>(*detector_, *cal_);
            for (double v : prefix_) streaming_->push(v);
            prefix_.clear();
            prefix_.shrink_to_fit();
        }
        return;
    }

    const auto& cfg = config_.sampler;
    const double tau = config_.detector.tau;
    const auto score = streaming_->push(encoded);
    if (score && *score > tau) {
        out.emplace_back(DetectionEvent{i, slots_.start() + slots_.step() * static_cast<long long>(i), *score, tau,
                                        std::string(detector_->name())});
        if (options_.model) {
            for (auto& p : pending_) {
                if (!p.early_stop && i - p.t <= cfg.window) {
                    p.early_stop = i - p.t;
                    p.last = forward_last(p.t, cfg, p.early_stop);
                }
            }
            if (i >= cfg.window) pending_.push_back(Pending{i, i + cfg.window, std::nullopt, std::nullopt});
        }
    }

    if (options_.model) {
        const auto& model = *options_.model;
        const auto shift = [this](SampleClassification c) {
            c.first += base_;
            c.last += base_;
            return c;
        };
        std::size_t done = 0;
        for (auto& p : pending_) {
            const std::size_t local = p.t - base_;
            if (!p.backward && i == p.t + cfg.extension) {
                p.backward = shift(classify_sample(model, sample_backward(buffer_span(), local, cfg), options_.mode,
                                                   config_.zero_epsilon));
            }
            if (i == p.last) {
                std::vector<std::size_t> stop;
                if (p.early_stop) stop.push_back(local + *p.early_stop);
                IdentifiedEvent e;
                e.index = p.t;
                e.timestamp = slots_.start() + slots_.step() * static_cast<long long>(p.t);
                e.backward = *p.backward;
                e.forward = shift(classify_sample(model, sample_forward(buffer_span(), local, cfg, stop),
                                                  options_.mode, config_.zero_epsilon));
                e.verdict = fuse_verdict(e.backward, e.forward, model.params().threshold);
                out.emplace_back(std::move(e));
                ++done;
            }
        }
        if (done > 0) {
            std::erase_if(pending_, [i](const Pending& p) { return p.last == i; });
        }
    }

    // Keep what the next backward sample and every pending sample can reach.
    std::size_t keep_from = i + 1 > cfg.window ? i + 1 - cfg.window : 0;
    for (const auto& p : pending_) keep_from = std::min(keep_from, p.t - cfg.window);
    if (keep_from > base_ + 4096) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(keep_from - base_));
        base_ = keep_from;
    }
}

// ---------------------------------------------------------------------------
// Batch

std::vector<PipelineRecord> run_batch(const RawSeries& series, const PipelineConfig& config,
                                      const RunOptions& options) {
    config.sampler.validate();
    const std::size_t length =
        options.calibration ? options.calibration->length : config.detector.calibration_length();
    if (series.size() < length) return {};
    const auto detector = make_detector(config.detector);
    const auto encoded = delta_encode(series.values());
    const Calibration cal = options.calibration ? *options.calibration : calibrate(*detector, encoded, length);
    const auto scores = score_series(*detector, encoded, cal);
    const double tau = config.detector.tau;
    const auto flagged = flagged_indices(scores, tau, length);
    const auto& cfg = config.sampler;

    // (emission index, kind, detection index) reproduces the streaming order.
    std::vector<std::tuple<std::size_t, int, std::size_t, PipelineRecord>> keyed;
    for (std::size_t t : flagged) {
        keyed.emplace_back(t, 0, t,
                           DetectionEvent{t, series.timestamp(t), scores[t], tau, std::string(detector->name())});
        if (!options.model || t < cfg.window) continue;
        if (t + cfg.extension >= encoded.size()) continue;
        const auto stop = early_stop_offset(t, cfg, flagged);
        const std::size_t last = forward_last(t, cfg, stop);
        if (last >= encoded.size()) continue;
        IdentifiedEvent e;
        e.index = t;
        e.timestamp = series.timestamp(t);
        e.backward = classify_sample(*options.model, sample_backward(encoded, t, cfg), options.mode,
                                     config.zero_epsilon);
        e.forward = classify_sample(*options.model, sample_forward(encoded, t, cfg, flagged), options.mode,
                                    config.zero_epsilon);
        e.verdict = fuse_verdict(e.backward, e.forward, options.model->params().threshold);
        keyed.emplace_back(last, 1, t, std::move(e));
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
               std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
    });
    std::vector<PipelineRecord> out;
    out.reserve(keyed.size());
    for (auto& k : keyed) out.push_back(std::move(std::get<3>(k)));
    return out;
}

// ---------------------------------------------------------------------------
// EVM training

std::vector<TimeSeriesFold> time_series_folds(std::size_t n, std::size_t folds) {
    if (folds == 0) throw FoldError("need at least one fold");
    const std::size_t m = n / (folds + 1);
    if (m == 0) {
        throw FoldError(std::to_string(n) + " samples cannot form " + std::to_string(folds) + " time-series folds");
    }
    std::vector<TimeSeriesFold> out;
    for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t begin = n - (folds - k) * m;
        out.push_back(TimeSeriesFold{begin, begin, begin + m});
    }
    return out;
}

namespace {

std::set<std::string> label_set(std::span<const FeatureVector> v) {
    std::set<std::string> out;
    for (const auto& f : v) {
        if (!f.label) throw LabelError("training sample without a label");
        out.insert(*f.label);
    }
    return out;
}

// Argmax label and its probability; the open-mode label at threshold rho is
// the argmax iff probability >= rho.
std::vector<std::pair<std::string, double>> closed_predictions(const EvmModel& model,
                                                               std::span<const FeatureVector> data) {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(data.size());
    for (const auto& v : data) {
        const auto p = model.classify(v, PredictMode::kClosed);
        out.emplace_back(*p.label, p.max_probability);
    }
    return out;
}

std::optional<std::string> open_label(const std::pair<std::string, double>& closed, double rho) {
    if (closed.second >= rho) return closed.first;
    return std::nullopt;
}

}  // namespace

TrainingReport train_evm(const PipelineConfig& config, std::span<const FeatureVector> train) {
    config.evm.params.validate();
    if (label_set(train).size() < 2) throw NeedTwoClasses("training data must hold at least two classes");

    TrainingReport report;
    EvmParams params = config.evm.params;
    if (config.evm.select_threshold) {
        const auto grid = config.evm.rho_grid.empty() ? default_rho_grid() : config.evm.rho_grid;
        const auto folds = time_series_folds(train.size(), config.evm.folds);
        std::vector<double> f1_sum(grid.size(), 0.0);
        for (std::size_t k = 0; k < folds.size(); ++k) {
            const auto fit_part = train.subspan(0, folds[k].train_end);
            const auto val_part = train.subspan(folds[k].test_begin, folds[k].test_end - folds[k].test_begin);
            if (label_set(fit_part).size() < 2) {
                throw FoldError("fold " + std::to_string(k + 1) + " trains on a single class");
            }
            const auto model = EvmModel::fit_features(fit_part, params);
            const auto predictions = closed_predictions(model, val_part);
            for (std::size_t r = 0; r < grid.size(); ++r) {
                Confusion confusion;
                for (std::size_t i = 0; i < val_part.size(); ++i) {
                    confusion.add(*val_part[i].label, open_label(predictions[i], grid[r]));
                }
                f1_sum[r] += confusion.macro_f1(model.classes());
            }
        }
        std::optional<std::size_t> chosen;
        std::size_t best = 0;
        for (std::size_t r = 0; r < grid.size(); ++r) {
            const double mean = f1_sum[r] / static_cast<double>(folds.size());
            report.cv.push_back(RhoScore{grid[r], mean});
            if (!chosen && mean >= config.evm.f1_requirement) chosen = r;
            if (mean > report.cv[best].mean_f1) best = r;
        }
        if (!chosen) {
            report.fallback = true;
            report.warnings.push_back("no threshold reaches the required F1 of " +
                                      detail::format_double(config.evm.f1_requirement) +
                                      "; using the best cross-validated threshold " +
                                      detail::format_double(grid[best]));
        }
        params.threshold = grid[chosen.value_or(best)];
    }
    report.rho = params.threshold;
    report.model = EvmModel::fit_features(train, params);
    return report;
}

// ---------------------------------------------------------------------------
// Threshold sweep

SweepReport sweep(const PipelineConfig& config, const RawSeries& series, std::span<const EventWindow> events,
                  std::span<const double> taus) {
    config.evaluation.fad.validate();
    const std::size_t length = config.detector.calibration_length();
    const auto detector = make_detector(config.detector);
    const auto encoded = delta_encode(series.values());
    const auto cal = calibrate(*detector, encoded, length);
    const auto scores = score_series(*detector, encoded, cal);

    SweepReport report;
    report.evaluated_points = series.size() > length ? series.size() - length : 0;
    report.aucpr = aucpr(scores, events, length);
    report.rows.resize(taus.size());

    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t k = next++; k < taus.size(); k = next++) {
            auto& row = report.rows[k];
            row.tau = taus[k];
            const auto flagged = flagged_indices(scores, row.tau, length);
            row.outcome = label_detections(events, flagged, series.size(), length);
            row.pr = binary_f1(row.outcome);
            row.fad = fad_score(row.outcome, events, config.evaluation.fad);
            if (row.outcome.tp > 0) row.delay_min = detection_delay(row.outcome, events, series.step());
        }
    };
    const unsigned workers = std::clamp(std::thread::hardware_concurrency(), 1u, 16u);
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        const auto& row = report.rows[k];
        if (k == 0 || row.pr.f1 > report.f1_max) {
            report.f1_max = row.pr.f1;
            report.tau_opt_f1 = row.tau;
        }
        if (k == 0 || row.fad.fad_norm > report.fad_max) {
            report.fad_max = row.fad.fad_norm;
            report.tau_opt_fad = row.tau;
            report.delay_at_opt_fad = row.delay_min;
        }
    }
    return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
    using detail::format_double;
    out << "tau,tp,fn,fp,tn,precision,recall,f1,fad,fad_norm,delay_min\n";
    for (const auto& r : report.rows) {
        out << format_double(r.tau) << ',' << r.outcome.tp << ',' << r.outcome.fn << ',' << r.outcome.fp << ','
            << r.outcome.tn << ',' << format_double(r.pr.precision) << ',' << format_double(r.pr.recall) << ','
            << format_double(r.pr.f1) << ',' << format_double(r.fad.fad) << ',' << format_double(r.fad.fad_norm)
            << ',' << (r.delay_min ? format_double(*r.delay_min) : std::string("nan")) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Open-set vs closed-set comparison

OsCsReport os_cs_experiment(const EvmModel& model, std::span<const FeatureVector> test) {
    if (!model.fitted()) throw ModelError("model is not fitted");
    const auto& known = model.classes();
    const double rho = model.params().threshold;
    label_set(test);
    const auto predictions = closed_predictions(model, test);

    OsCsReport report;
    report.rho = rho;
    const std::vector<std::string> ladder = {"MP", "FV", "DU"};
    for (std::size_t level = 0; level <= ladder.size(); ++level) {
        std::set<std::string> allowed(known.begin(), known.end());
        OpennessLevel row;
        for (std::size_t u = 0; u < level; ++u) {
            allowed.insert(ladder[u]);
            row.unknown_classes.push_back(ladder[u]);
        }
        Confusion open, closed;
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (!allowed.count(*test[i].label)) continue;
            open.add(*test[i].label, open_label(predictions[i], rho));
            closed.add(*test[i].label, predictions[i].first);
            ++row.test_samples;
        }
        row.openness = openness(known.size(), known.size() + level, known.size());
        row.open_f1 = open.macro_f1(known);
        row.closed_f1 = closed.macro_f1(known);
        report.levels.push_back(std::move(row));
    }

    std::size_t fv = 0, rejected = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (*test[i].label != "FV") continue;
        ++fv;
        if (open_label(predictions[i], rho) != kActivationLabel) ++rejected;
    }
    if (fv > 0) report.fv_rejection = static_cast<double>(rejected) / static_cast<double>(fv);
    return report;
}

}  // namespace flexid

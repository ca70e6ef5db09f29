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

#include "flexid/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include "flexid/errors.hpp"
#include "text_util.hpp"

namespace flexid {

const char* to_string(EventClass c) {
    switch (c) {
        case EventClass::kFA: return "FA";
        case EventClass::kNO: return "NO";
        case EventClass::kMP: return "MP";
        case EventClass::kFV: return "FV";
        case EventClass::kDU: return "DU";
    }
    return "FA";
}

EventClass parse_event_class(std::string_view name) {
    for (auto c : {EventClass::kFA, EventClass::kNO, EventClass::kMP, EventClass::kFV, EventClass::kDU}) {
        if (name == to_string(c)) return c;
    }
    throw DataError("unknown event class '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
    if (days == 0 || warmup_days >= days) throw ConfigError("scenario needs more days than warmup days");
    if (!parse_timestamp(start)) throw ConfigError("bad scenario start '" + start + "'");
    if (fa_min_length == 0 || fa_min_length > fa_max_length) throw ConfigError("bad FA length range");
    if (mp_min_length == 0 || mp_min_length > mp_max_length) throw ConfigError("bad MP length range");
    if (!(fa_magnitude_min > 0.0 && fa_magnitude_min <= fa_magnitude_max)) throw ConfigError("bad FA magnitude range");
    if (!(du_factor_min > 0.0 && du_factor_min <= du_factor_max && du_factor_max < 1.0)) {
        throw ConfigError("bad DU factor range");
    }
    if (!(noise_std >= 0.0) || !(mean_kw > 0.0)) throw ConfigError("bad base profile");
    if (fa_count == 0 && (no_count > 0 || fv_count > 0 || du_count > 0)) {
        throw ConfigError("NO, FV and DU lengths are drawn from FA lengths; fa_count must be positive");
    }
}

namespace {

class Occupancy {
  public:
    Occupancy(std::size_t n, std::size_t lo, std::size_t margin) : used_(n, false), lo_(lo), margin_(margin) {}

    bool free(std::size_t first, std::size_t last) const {
        if (first < lo_ + margin_ || last + margin_ >= used_.size()) return false;
        for (std::size_t i = first - margin_; i <= last + margin_; ++i) {
            if (used_[i]) return false;
        }
        return true;
    }

    void take(std::size_t first, std::size_t last) {
        for (std::size_t i = first; i <= last; ++i) used_[i] = true;
    }

    /// Random start of a free run of `length` samples.
    std::size_t place(std::size_t length, std::mt19937_64& rng, const char* what) {
        if (lo_ + 2 * margin_ + length >= used_.size()) {
            throw PackingError(std::string("no room for ") + what + " events");
        }
        std::uniform_int_distribution<std::size_t> pick(lo_ + margin_, used_.size() - margin_ - length);
        for (int attempt = 0; attempt < 20000; ++attempt) {
            const std::size_t s = pick(rng);
            if (free(s, s + length - 1)) {
                take(s, s + length - 1);
                return s;
            }
        }
        throw PackingError(std::string("cannot place all ") + what + " events; reduce event counts or add days");
    }

  private:
    std::vector<bool> used_;
    std::size_t lo_;
    std::size_t margin_;
};

double weekly_factor(double damping, double day_of_week) {
    // Smooth dip centred on the weekend (day 6.0 = Sunday 00:00, Monday = 0).
    const double c = 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * (day_of_week - 6.0) / 7.0);
    return 1.0 - damping * c * c;
}

}  // namespace

Scenario generate(const ScenarioConfig& cfg) {
    cfg.validate();
    using namespace std::chrono;
    const Timestamp start = *parse_timestamp(cfg.start);
    const std::size_t n = cfg.length();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Base profile.
    std::vector<double> level(n), load(n);
    const auto start_day = floor<days>(start);
    const unsigned start_weekday = weekday{start_day}.iso_encoding() - 1;  // Monday = 0
    const double start_hour = duration<double, std::ratio<3600>>(start - start_day).count();
    for (std::size_t i = 0; i < n; ++i) {
        const double hours_since = start_hour + static_cast<double>(i) * (static_cast<double>(kDefaultStep.count()) / 3600.0);
        const double hour = std::fmod(hours_since, 24.0);
        const double day_of_week = std::fmod(static_cast<double>(start_weekday) + hours_since / 24.0, 7.0);
        const double daily = (std::sin(2.0 * std::numbers::pi * (hour - 12.0) / 24.0) +
                              0.3 * std::sin(4.0 * std::numbers::pi * (hour - 7.0) / 24.0)) /
                             1.3;
        level[i] = (cfg.mean_kw + cfg.trend_per_day * hours_since / 24.0 + cfg.daily_amplitude * daily) *
                   weekly_factor(cfg.weekend_damping, day_of_week);
        load[i] = std::max(0.0, level[i] + cfg.noise_std * noise(rng));
    }

    const std::size_t warmup = cfg.warmup_days * kSamplesPerDay;
    Occupancy occ(n, warmup, cfg.margin);
    GroundTruth truth;

    // FA activations: step with a one-sample ramp, then a decaying rebound of
    // opposite sign over three times the event length.
    std::uniform_int_distribution<std::size_t> fa_len(cfg.fa_min_length, cfg.fa_max_length);
    std::uniform_real_distribution<double> fa_mag(cfg.fa_magnitude_min, cfg.fa_magnitude_max);
    std::bernoulli_distribution reduction(0.5);
    std::vector<std::size_t> fa_lengths;
    for (std::size_t k = 0; k < cfg.fa_count; ++k) {
        const std::size_t len = fa_len(rng);
        const std::size_t s = occ.place(len * (1 + kReboundFactor), rng, "FA");
        const double sign = reduction(rng) ? -1.0 : 1.0;
        const double base_step = load[s] - load[s - 1];
        const double needed = 1.1 * cfg.start_delta_k * cfg.noise_std - sign * base_step;
        const double magnitude = std::max(fa_mag(rng) * level[s], needed);
        const std::size_t e = s + len - 1;
        for (std::size_t i = s; i <= e; ++i) load[i] = std::max(0.0, load[i] + sign * magnitude);
        const double tau = static_cast<double>(len);
        double weight = 0.0;
        for (std::size_t j = 0; j < kReboundFactor * len; ++j) weight += std::exp(-static_cast<double>(j) / tau);
        const double amp = cfg.rebound_energy * magnitude * tau / weight;
        for (std::size_t j = 0; j < kReboundFactor * len; ++j) {
            auto& x = load[e + 1 + j];
            x = std::max(0.0, x - sign * amp * std::exp(-static_cast<double>(j) / tau));
        }
        truth.push_back(TruthEvent{EventClass::kFA, s, e, sign * magnitude});
        fa_lengths.push_back(len);
    }

    // Monday morning peaks at 08:00.
    std::vector<std::size_t> mondays;
    for (std::size_t i = warmup; i < n; ++i) {
        const Timestamp t = start + kDefaultStep * static_cast<long long>(i);
        const auto day = floor<days>(t);
        if (weekday{day} == Monday && t - day == hours{8}) mondays.push_back(i);
    }
    std::shuffle(mondays.begin(), mondays.end(), rng);
    std::uniform_int_distribution<std::size_t> mp_len(cfg.mp_min_length, cfg.mp_max_length);
    std::uniform_real_distribution<double> mp_amp(cfg.mp_amplitude_min, cfg.mp_amplitude_max);
    std::size_t mp_placed = 0;
    for (std::size_t m : mondays) {
        if (mp_placed == cfg.mp_count) break;
        const std::size_t len = mp_len(rng);
        const double amp = mp_amp(rng);
        if (!occ.free(m, m + len - 1)) continue;
        occ.take(m, m + len - 1);
        for (std::size_t j = 0; j < len; ++j) {
            load[m + j] += amp * (1.0 - static_cast<double>(j) / static_cast<double>(len));
        }
        truth.push_back(TruthEvent{EventClass::kMP, m, m + len - 1, amp});
        ++mp_placed;
    }
    if (mp_placed < cfg.mp_count) throw PackingError("not enough free Monday mornings for MP events");

    auto draw_length = [&]() {
        std::uniform_int_distribution<std::size_t> pick(0, fa_lengths.size() - 1);
        return fa_lengths[pick(rng)];
    };

    for (std::size_t k = 0; k < cfg.no_count; ++k) {
        const std::size_t len = draw_length();
        const std::size_t s = occ.place(len, rng, "NO");
        truth.push_back(TruthEvent{EventClass::kNO, s, s + len - 1, 0.0});
    }

    std::vector<double> faulted = load;
    for (std::size_t k = 0; k < cfg.fv_count; ++k) {
        const std::size_t n_cons = draw_length();
        const std::size_t s = occ.place(n_cons + 1, rng, "FV");
        for (std::size_t j = 1; j <= n_cons; ++j) faulted[s + j] = faulted[s];
        truth.push_back(TruthEvent{EventClass::kFV, s, s + n_cons, faulted[s]});
    }
    std::uniform_real_distribution<double> du_factor(cfg.du_factor_min, cfg.du_factor_max);
    for (std::size_t k = 0; k < cfg.du_count; ++k) {
        const std::size_t len = draw_length();
        const double f = du_factor(rng);
        const std::size_t s = occ.place(len, rng, "DU");
        for (std::size_t j = 0; j < len; ++j) faulted[s + j] *= f;
        truth.push_back(TruthEvent{EventClass::kDU, s, s + len - 1, f});
    }

    std::stable_sort(truth.begin(), truth.end(), [](const TruthEvent& a, const TruthEvent& b) { return a.start < b.start; });
    return Scenario{RawSeries(start, kDefaultStep, std::move(load)), RawSeries(start, kDefaultStep, std::move(faulted)),
                    std::move(truth)};
}

std::vector<EventWindow> event_windows(const GroundTruth& truth, EventClass cls) {
    std::vector<EventWindow> out;
    for (const auto& e : truth) {
        if (e.cls == cls) out.push_back(EventWindow{e.start, e.end});
    }
    return out;
}

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
    out << "class,start_idx,end_idx,param\n";
    for (const auto& e : truth) {
        out << to_string(e.cls) << ',' << e.start << ',' << e.end << ',' << detail::format_double(e.param) << '\n';
    }
}

GroundTruth read_truth_csv(std::istream& in) {
    GroundTruth truth;
    std::string line;
    std::size_t row = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++row;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        if (header) {
            header = false;
            if (trimmed.rfind("class,", 0) == 0) continue;
        }
        const auto f = detail::split(trimmed, ',');
        if (f.size() != 4) throw ParseError(row, "expected class,start_idx,end_idx,param");
        const auto s = detail::parse_double(f[1]);
        const auto e = detail::parse_double(f[2]);
        const auto p = detail::parse_double(f[3]);
        if (!s || !e || !p || *s < 0 || *e < *s || *s != std::floor(*s) || *e != std::floor(*e)) {
            throw ParseError(row, "bad truth row");
        }
        TruthEvent ev;
        try {
            ev.cls = parse_event_class(f[0]);
        } catch (const DataError& err) {
            throw ParseError(row, err.what());
        }
        ev.start = static_cast<std::size_t>(*s);
        ev.end = static_cast<std::size_t>(*e);
        ev.param = *p;
        truth.push_back(ev);
    }
    return truth;
}

ClassifierDataset build_classifier_dataset(const RawSeries& series, const GroundTruth& truth,
                                           const DatasetConfig& config) {
    if (truth.empty()) throw PackingError("ground truth is empty");
    const auto encoded = delta_encode(series.values());
    std::vector<std::vector<const TruthEvent*>> by_class(5);
    for (const auto& e : truth) by_class[static_cast<std::size_t>(e.cls)].push_back(&e);
    for (auto& v : by_class) {
        std::stable_sort(v.begin(), v.end(), [](const TruthEvent* a, const TruthEvent* b) { return a->start < b->start; });
    }

    auto featurize = [&](const TruthEvent& e) {
        if (e.start < config.margin + 1 || e.end + config.margin >= encoded.size()) {
            throw BoundaryError("event at " + std::to_string(e.start) + " is too close to the series edge");
        }
        const std::span<const double> s(encoded.data() + e.start - config.margin, e.length() + 2 * config.margin);
        auto v = extract_features(s);
        v.label = to_string(e.cls);
        return v;
    };

    // Both splits are emitted in time order of the event start.
    std::vector<const TruthEvent*> train, test;
    std::size_t fa_test = 0;
    for (auto cls : {EventClass::kFA, EventClass::kNO}) {
        const auto& events = by_class[static_cast<std::size_t>(cls)];
        const auto n_train =
            static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(events.size())));
        for (std::size_t i = 0; i < events.size(); ++i) {
            (i < n_train ? train : test).push_back(events[i]);
        }
        if (cls == EventClass::kFA) fa_test = events.size() - n_train;
    }
    const std::size_t per_unknown =
        (fa_test + config.unknown_divisor - 1) / std::max<std::size_t>(1, config.unknown_divisor);
    for (auto cls : {EventClass::kMP, EventClass::kFV, EventClass::kDU}) {
        const auto& events = by_class[static_cast<std::size_t>(cls)];
        const std::size_t take = std::min(per_unknown, events.size());
        for (std::size_t i = events.size() - take; i < events.size(); ++i) test.push_back(events[i]);
    }
    const auto by_start = [](const TruthEvent* a, const TruthEvent* b) { return a->start < b->start; };
    std::stable_sort(train.begin(), train.end(), by_start);
    std::stable_sort(test.begin(), test.end(), by_start);
    ClassifierDataset ds;
    for (const auto* e : train) ds.train.push_back(featurize(*e));
    for (const auto* e : test) ds.test.push_back(featurize(*e));
    return ds;
}

}  // namespace flexid

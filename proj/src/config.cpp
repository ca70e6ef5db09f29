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

#include "flexid/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "flexid/errors.hpp"
#include "text_util.hpp"

namespace flexid {

std::vector<double> default_rho_grid() {
    std::vector<double> grid;
    for (int i = 10; i <= 99; ++i) grid.push_back(i / 100.0);
    grid.insert(grid.end(), {0.999, 0.9999, 0.99999});
    return grid;
}

std::vector<double> EvaluationConfig::tau_grid() const {
    std::vector<double> grid;
    const auto n = static_cast<long>(std::floor((tau_max - tau_min) / tau_step + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(tau_min + static_cast<double>(i) * tau_step);
    return grid;
}

void PipelineConfig::validate() const {
    if (version != kConfigVersion) {
        throw ConfigError("unsupported config version " + std::to_string(version));
    }
    if (detector.kind != "persistence" && detector.kind != "spectral_residual") {
        throw ConfigError("unknown detector kind '" + detector.kind + "'");
    }
    if (!(detector.tau >= 0.0 && detector.tau <= 1.0)) throw ConfigError("detector.tau must lie in [0, 1]");
    if (detector.calibration_days == 0) throw ConfigError("detector.calibration_days must be positive");
    if (detector.sr.window < 2 * detector.sr.local_average || detector.sr.slope_points == 0 ||
        detector.sr.filter == 0 || detector.sr.local_average == 0) {
        throw ConfigError("inconsistent spectral residual parameters");
    }
    sampler.validate();
    if (!(zero_epsilon >= 0.0)) throw ConfigError("sampler.zero_epsilon must be non-negative");
    evm.params.validate();
    if (evm.folds < 2) throw ConfigError("evm.folds must be at least 2");
    for (double r : evm.rho_grid) {
        if (!(r > 0.0 && r < 1.0)) throw ConfigError("evm.rho_grid values must lie in (0, 1)");
    }
    evaluation.fad.validate();
    if (!(evaluation.tau_step > 0.0) || !(evaluation.tau_min <= evaluation.tau_max)) {
        throw ConfigError("bad evaluation tau grid");
    }
    scenario.validate();
    if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0) || dataset.unknown_divisor == 0) {
        throw ConfigError("bad dataset split parameters");
    }
}

namespace {

struct Field {
    std::string section;
    std::string key;
    std::function<std::string()> get;
    std::function<void(std::string_view)> set;
};

double to_double(std::string_view v) {
    const auto d = detail::parse_double(v);
    if (!d) throw ConfigError("expected a number, got '" + std::string(v) + "'");
    return *d;
}

template <typename T>
T to_integer(std::string_view v) {
    v = detail::trim(v);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
}

bool to_bool(std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

class Binder {
  public:
    explicit Binder(std::vector<Field>& out) : out_(out) {}

    Binder& section(std::string name) {
        section_ = std::move(name);
        return *this;
    }

    Binder& num(const char* key, double& ref) {
        return add(key, [&ref] { return detail::format_double(ref); }, [&ref](std::string_view v) { ref = to_double(v); });
    }
    template <typename T>
    Binder& integer(const char* key, T& ref) {
        return add(key, [&ref] { return std::to_string(ref); }, [&ref](std::string_view v) { ref = to_integer<T>(v); });
    }
    Binder& flag(const char* key, bool& ref) {
        return add(key, [&ref] { return std::string(ref ? "true" : "false"); },
                   [&ref](std::string_view v) { ref = to_bool(v); });
    }
    Binder& text(const char* key, std::string& ref) {
        return add(key, [&ref] { return ref; }, [&ref](std::string_view v) { ref = std::string(v); });
    }
    Binder& add(const char* key, std::function<std::string()> get, std::function<void(std::string_view)> set) {
        out_.push_back(Field{section_, key, std::move(get), std::move(set)});
        return *this;
    }

  private:
    std::vector<Field>& out_;
    std::string section_;
};

std::vector<Field> bind(PipelineConfig& c) {
    std::vector<Field> f;
    Binder b(f);
    b.section("").add(
        "version", [&c] { return std::to_string(c.version); },
        [&c](std::string_view v) { c.version = to_integer<int>(v); });

    b.section("detector")
        .text("kind", c.detector.kind)
        .num("tau", c.detector.tau)
        .integer("calibration_days", c.detector.calibration_days)
        .integer("sr_window", c.detector.sr.window)
        .integer("sr_local_average", c.detector.sr.local_average)
        .integer("sr_estimated_points", c.detector.sr.estimated_points)
        .integer("sr_slope_points", c.detector.sr.slope_points)
        .integer("sr_filter", c.detector.sr.filter);

    b.section("sampler")
        .integer("window", c.sampler.window)
        .integer("extension", c.sampler.extension)
        .num("zero_epsilon", c.zero_epsilon);

    auto& p = c.evm.params;
    b.section("evm")
        .integer("tailsize", p.tailsize)
        .num("distance_multiplier", p.distance_multiplier)
        .add(
            "metric", [&p] { return std::string(to_string(p.metric)); },
            [&p](std::string_view v) { p.metric = parse_distance_metric(v); })
        .num("threshold", p.threshold)
        .num("default_shape", p.default_shape)
        .num("f1_requirement", c.evm.f1_requirement)
        .integer("folds", c.evm.folds)
        .flag("select_threshold", c.evm.select_threshold)
        .add(
            "rho_grid",
            [&c] {
                std::string s;
                for (double r : c.evm.rho_grid) s += (s.empty() ? "" : ",") + detail::format_double(r);
                return s;
            },
            [&c](std::string_view v) {
                c.evm.rho_grid.clear();
                if (detail::trim(v).empty()) return;
                for (auto part : detail::split(v, ',')) c.evm.rho_grid.push_back(to_double(part));
            });

    auto& fad = c.evaluation.fad;
    b.section("evaluation")
        .num("xi", fad.xi)
        .num("eta", fad.eta)
        .num("gamma", fad.gamma)
        .num("upsilon", fad.upsilon)
        .num("nu", fad.nu)
        .add(
            "fp_penalty", [&fad] { return std::string(to_string(fad.fp_penalty)); },
            [&fad](std::string_view v) { fad.fp_penalty = parse_fp_penalty(v); })
        .num("tau_min", c.evaluation.tau_min)
        .num("tau_max", c.evaluation.tau_max)
        .num("tau_step", c.evaluation.tau_step);

    b.section("io")
        .text("timestamp_column", c.io.columns.timestamp)
        .text("load_column", c.io.columns.load)
        .add(
            "fill_gaps", [&c] { return std::string(c.io.gaps == GapPolicy::kHold ? "hold" : "report"); },
            [&c](std::string_view v) {
                if (v == "hold") {
                    c.io.gaps = GapPolicy::kHold;
                } else if (v == "report") {
                    c.io.gaps = GapPolicy::kReport;
                } else {
                    throw ConfigError("fill_gaps must be report or hold");
                }
            });

    auto& s = c.scenario;
    b.section("datagen")
        .integer("seed", s.seed)
        .integer("days", s.days)
        .text("start", s.start)
        .integer("households", s.households)
        .integer("warmup_days", s.warmup_days)
        .num("mean_kw", s.mean_kw)
        .num("daily_amplitude", s.daily_amplitude)
        .num("weekend_damping", s.weekend_damping)
        .num("trend_per_day", s.trend_per_day)
        .num("noise_std", s.noise_std)
        .integer("fa_count", s.fa_count)
        .integer("mp_count", s.mp_count)
        .integer("no_count", s.no_count)
        .integer("fv_count", s.fv_count)
        .integer("du_count", s.du_count)
        .integer("fa_min_length", s.fa_min_length)
        .integer("fa_max_length", s.fa_max_length)
        .num("fa_magnitude_min", s.fa_magnitude_min)
        .num("fa_magnitude_max", s.fa_magnitude_max)
        .num("rebound_energy", s.rebound_energy)
        .num("start_delta_k", s.start_delta_k)
        .num("mp_amplitude_min", s.mp_amplitude_min)
        .num("mp_amplitude_max", s.mp_amplitude_max)
        .integer("mp_min_length", s.mp_min_length)
        .integer("mp_max_length", s.mp_max_length)
        .num("du_factor_min", s.du_factor_min)
        .num("du_factor_max", s.du_factor_max)
        .integer("margin", s.margin)
        .integer("sample_margin", c.dataset.margin)
        .num("train_fraction", c.dataset.train_fraction)
        .integer("unknown_divisor", c.dataset.unknown_divisor);
    return f;
}

std::string_view strip_comment(std::string_view line) {
    const auto pos = line.find_first_of("#;");
    return pos == std::string_view::npos ? line : line.substr(0, pos);
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
    PipelineConfig c;
    auto fields = bind(c);
    std::string section;
    std::size_t line_no = 0;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        auto end = text.find('\n', begin);
        if (end == std::string_view::npos) end = text.size();
        const auto line = detail::trim(strip_comment(text.substr(begin, end - begin)));
        begin = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            bool known = false;
            for (const auto& f : fields) known = known || f.section == section;
            if (!known) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        auto value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        bool matched = false;
        for (auto& f : fields) {
            if (f.section == section && f.key == key) {
                try {
                    f.set(value);
                } catch (const Error& e) {
                    throw ConfigError(where + std::string(key) + ": " + e.what());
                }
                matched = true;
                break;
            }
        }
        if (!matched) {
            throw ConfigError(where + "unknown key '" + std::string(key) + "'" +
                              (section.empty() ? std::string() : " in [" + section + "]"));
        }
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_text(const PipelineConfig& config) {
    PipelineConfig copy = config;
    const auto fields = bind(copy);
    std::string out;
    std::string section;
    for (const auto& f : fields) {
        if (f.section != section) {
            section = f.section;
            out += "\n[" + section + "]\n";
        }
        out += f.key + " = " + f.get() + "\n";
    }
    return out;
}

}  // namespace flexid

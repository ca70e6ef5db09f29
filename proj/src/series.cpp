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

#include "flexid/series.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "flexid/errors.hpp"
#include "text_util.hpp"

namespace flexid {

namespace {

bool parse_int(std::string_view text, int& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    text = detail::trim(text);
    if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) {
        text.remove_suffix(1);
    } else if (text.size() > 6 && text.substr(text.size() - 6) == "+00:00") {
        text.remove_suffix(6);
    }
    // YYYY-MM-DDTHH:MM[:SS]
    if (text.size() != 19 && text.size() != 16) {
        return std::nullopt;
    }
    if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
        return std::nullopt;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
        !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
        !parse_int(text.substr(14, 2), mi)) {
        return std::nullopt;
    }
    if (text.size() == 19) {
        if (text[16] != ':' || !parse_int(text.substr(17, 2), s)) {
            return std::nullopt;
        }
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        return std::nullopt;
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const hh_mm_ss hms{t - day_start};
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

RawSeries::RawSeries(Timestamp start, Duration step, std::vector<double> values)
    : start_(start), step_(step), values_(std::move(values)) {
    if (values_.empty()) {
        throw EmptyInput("series has no values");
    }
    if (step_ <= Duration::zero()) {
        throw StepError("series step must be positive");
    }
}

DeltaSeries::DeltaSeries(Timestamp start, Duration step, std::vector<double> encoded)
    : start_(start), step_(step), encoded_(std::move(encoded)) {
    if (encoded_.empty()) {
        throw EmptyInput("delta series has no values");
    }
    if (step_ <= Duration::zero()) {
        throw StepError("series step must be positive");
    }
}

std::vector<double> delta_encode(std::span<const double> values) {
    if (values.empty()) {
        throw EmptyInput("cannot delta-encode an empty series");
    }
    std::vector<double> out(values.size());
    out[0] = values[0];
    for (std::size_t i = 1; i < values.size(); ++i) {
        out[i] = values[i] - values[i - 1];
    }
    return out;
}

std::vector<double> delta_decode(std::span<const double> encoded) {
    if (encoded.empty()) {
        throw EmptyInput("cannot decode an empty delta series");
    }
    std::vector<double> out(encoded.size());
    out[0] = encoded[0];
    for (std::size_t i = 1; i < encoded.size(); ++i) {
        out[i] = out[i - 1] + encoded[i];
    }
    return out;
}

DeltaSeries delta_encode(const RawSeries& series) {
    return DeltaSeries(series.start_time(), series.step(), delta_encode(series.values()));
}

RawSeries delta_decode(const DeltaSeries& delta) {
    return RawSeries(delta.start_time(), delta.step(), delta_decode(delta.encoded()));
}

CsvRowReader::CsvRowReader(std::istream& in, const CsvColumns& columns) : in_(in) {
    std::string header;
    while (std::getline(in_, header)) {
        ++line_;
        if (!detail::trim(header).empty()) {
            break;
        }
    }
    if (detail::trim(header).empty()) {
        throw EmptyInput("input has no header row");
    }
    const auto fields = detail::split(detail::trim(header), ',');
    columns_ = fields.size();
    bool have_ts = false, have_load = false;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = detail::trim(fields[i]);
        if (name == columns.timestamp) {
            timestamp_col_ = i;
            have_ts = true;
        } else if (name == columns.load) {
            load_col_ = i;
            have_load = true;
        }
    }
    if (!have_ts || !have_load) {
        throw ParseError(line_, "header must contain columns '" + columns.timestamp + "' and '" +
                                    columns.load + "'");
    }
}

std::optional<CsvRowReader::Row> CsvRowReader::next() {
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        const auto trimmed = detail::trim(text);
        if (trimmed.empty()) {
            continue;
        }
        const auto fields = detail::split(trimmed, ',');
        if (fields.size() != columns_) {
            throw ParseError(line_, "expected " + std::to_string(columns_) + " fields");
        }
        const auto ts = parse_timestamp(fields[timestamp_col_]);
        if (!ts) {
            throw ParseError(line_, "bad timestamp '" + std::string(fields[timestamp_col_]) + "'");
        }
        const auto value = detail::parse_double(fields[load_col_]);
        if (!value) {
            throw ParseError(line_, "bad load value '" + std::string(fields[load_col_]) + "'");
        }
        return Row{line_, *ts, *value};
    }
    return std::nullopt;
}

std::size_t SlotTracker::advance(Timestamp t, std::size_t line) {
    if (!start_) {
        start_ = last_ = t;
        return 1;
    }
    const Duration diff = t - last_;
    if (diff <= Duration::zero()) {
        throw OrderError("row " + std::to_string(line) + ": timestamp " + format_timestamp(t) +
                         " does not increase");
    }
    if (!step_known_) {
        step_ = diff;
        step_known_ = true;
    }
    if (diff % step_ != Duration::zero()) {
        throw StepError("row " + std::to_string(line) + ": interval of " + std::to_string(diff.count()) +
                        " s is not a multiple of the " + std::to_string(step_.count()) + " s step");
    }
    last_ = t;
    return static_cast<std::size_t>(diff / step_);
}

IngestResult ingest_csv(std::istream& in, const CsvColumns& columns, GapPolicy policy,
                        const MalformedRowHandler& on_malformed) {
    CsvRowReader reader(in, columns);
    std::vector<double> values;
    std::vector<Gap> gaps;
    SlotTracker slots;

    for (;;) {
        std::optional<CsvRowReader::Row> row;
        try {
            row = reader.next();
        } catch (const ParseError& e) {
            if (!on_malformed) throw;
            on_malformed(e);
            continue;
        }
        if (!row) break;
        Timestamp previous = row->timestamp;
        if (slots.started()) previous = slots.start() + slots.step() * static_cast<long long>(values.size() - 1);
        const std::size_t advance = slots.advance(row->timestamp, row->line);
        if (advance > 1) {
            gaps.push_back(Gap{values.size(), advance - 1, previous});
            const double fill =
                policy == GapPolicy::kHold ? values.back() : std::numeric_limits<double>::quiet_NaN();
            values.insert(values.end(), advance - 1, fill);
        }
        values.push_back(row->value);
    }
    if (!slots.started()) {
        throw EmptyInput("input has no data rows");
    }
    return IngestResult{RawSeries(slots.start(), slots.step(), std::move(values)), std::move(gaps)};
}

IngestResult ingest_csv(const std::filesystem::path& path, const CsvColumns& columns, GapPolicy policy,
                        const MalformedRowHandler& on_malformed) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return ingest_csv(in, columns, policy, on_malformed);
}

void write_csv(std::ostream& out, const RawSeries& series) {
    out << "timestamp,load_kw\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_timestamp(series.timestamp(i)) << ',' << detail::format_double(series[i]) << '\n';
    }
}

}  // namespace flexid

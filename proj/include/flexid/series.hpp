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

#ifndef FLEXID_SERIES_HPP_
#define FLEXID_SERIES_HPP_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flexid {

class ParseError;

using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

inline constexpr Duration kDefaultStep{300};
inline constexpr std::size_t kSamplesPerDay = 288;

/// Parses `YYYY-MM-DDTHH:MM:SS[Z]` (a space separator is accepted too).
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// Regularly sampled univariate load series in kW.
class RawSeries {
  public:
    RawSeries(Timestamp start, Duration step, std::vector<double> values);

    Timestamp start_time() const { return start_; }
    Duration step() const { return step_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    Timestamp timestamp(std::size_t i) const { return start_ + step_ * static_cast<long long>(i); }

  private:
    Timestamp start_;
    Duration step_;
    std::vector<double> values_;
};

/// Delta-encoded form of a RawSeries. Element 0 of the encoded stream is the
/// first raw value, element i >= 1 is x[i] - x[i-1].
class DeltaSeries {
  public:
    DeltaSeries(Timestamp start, Duration step, std::vector<double> encoded);

    Timestamp start_time() const { return start_; }
    Duration step() const { return step_; }
    std::size_t size() const { return encoded_.size(); }
    double first_value() const { return encoded_.front(); }
    /// Full encoded stream including the seed at index 0.
    std::span<const double> encoded() const { return encoded_; }
    double operator[](std::size_t i) const { return encoded_[i]; }
    Timestamp timestamp(std::size_t i) const { return start_ + step_ * static_cast<long long>(i); }

  private:
    Timestamp start_;
    Duration step_;
    std::vector<double> encoded_;
};

DeltaSeries delta_encode(const RawSeries& series);
RawSeries delta_decode(const DeltaSeries& delta);

std::vector<double> delta_encode(std::span<const double> values);
std::vector<double> delta_decode(std::span<const double> encoded);

struct CsvColumns {
    std::string timestamp = "timestamp";
    std::string load = "load_kw";
};

enum class GapPolicy {
    kReport,  // missing samples become NaN, gaps are listed
    kHold,    // missing samples repeat the last observed value
};

/// A run of missing samples: `missing` slots starting at series index `index`.
struct Gap {
    std::size_t index;
    std::size_t missing;
    Timestamp after;
};

struct IngestResult {
    RawSeries series;
    std::vector<Gap> gaps;
};

/// Called for every malformed row when rows are to be skipped instead of failing.
using MalformedRowHandler = std::function<void(const ParseError&)>;

/// Reads `timestamp,load_kw` rows. The step is inferred from the first two
/// rows. Throws OrderError, StepError, EmptyInput and ParseError; with a
/// handler, malformed rows are passed to it and skipped.
IngestResult ingest_csv(const std::filesystem::path& path, const CsvColumns& columns = {},
                        GapPolicy policy = GapPolicy::kReport, const MalformedRowHandler& on_malformed = {});
IngestResult ingest_csv(std::istream& in, const CsvColumns& columns = {},
                        GapPolicy policy = GapPolicy::kReport, const MalformedRowHandler& on_malformed = {});

/// Places incoming timestamps on a regular grid whose step is the interval
/// between the first two timestamps.
class SlotTracker {
  public:
    /// Number of grid slots the timestamp advances (1 for the first row and
    /// for consecutive rows, k + 1 after k missing samples). Throws
    /// OrderError and StepError; `line` only decorates the message.
    std::size_t advance(Timestamp t, std::size_t line = 0);

    bool started() const { return start_.has_value(); }
    Timestamp start() const { return *start_; }
    Duration step() const { return step_; }

  private:
    std::optional<Timestamp> start_;
    Timestamp last_{};
    Duration step_ = kDefaultStep;
    bool step_known_ = false;
};

void write_csv(std::ostream& out, const RawSeries& series);

/// Incremental row reader used by the streaming pipeline. Rows are returned
/// one at a time; header handling matches ingest_csv.
class CsvRowReader {
  public:
    struct Row {
        std::size_t line;
        Timestamp timestamp;
        double value;
    };

    CsvRowReader(std::istream& in, const CsvColumns& columns = {});

    /// Returns the next row, std::nullopt at end of input. Throws ParseError on
    /// malformed rows; the reader stays usable afterwards.
    std::optional<Row> next();

  private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t timestamp_col_ = 0;
    std::size_t load_col_ = 1;
    std::size_t columns_ = 2;
};

}  // namespace flexid

#endif  // FLEXID_SERIES_HPP_

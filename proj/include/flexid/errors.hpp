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

#ifndef FLEXID_ERRORS_HPP_
#define FLEXID_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flexid {

/// Base of every error raised by the library. The CLI maps the three
/// families below onto its exit codes.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (exit code 3).
class DataError : public Error {
  public:
    using Error::Error;
};

/// Problems with a trained model or with fitting one (exit code 4).
class ModelError : public Error {
  public:
    using Error::Error;
};

/// Invalid configuration (exit code 2).
class ConfigError : public Error {
  public:
    using Error::Error;
};

class EmptyInput : public DataError {
  public:
    using DataError::DataError;
};

class OrderError : public DataError {
  public:
    using DataError::DataError;
};

class StepError : public DataError {
  public:
    using DataError::DataError;
};

class ParseError : public DataError {
  public:
    ParseError(std::size_t row, const std::string& what)
        : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const { return row_; }

  private:
    std::size_t row_;
};

class CalibrationError : public DataError {
  public:
    using DataError::DataError;
};

class InsufficientHistory : public DataError {
  public:
    using DataError::DataError;
};

class BoundaryError : public DataError {
  public:
    using DataError::DataError;
};

class SampleTooShort : public DataError {
  public:
    using DataError::DataError;
};

class LabelError : public DataError {
  public:
    using DataError::DataError;
};

class MetricError : public DataError {
  public:
    using DataError::DataError;
};

class DomainError : public DataError {
  public:
    using DataError::DataError;
};

class PackingError : public DataError {
  public:
    using DataError::DataError;
};

class DimensionError : public ModelError {
  public:
    using ModelError::ModelError;
};

class NeedTwoClasses : public ModelError {
  public:
    using ModelError::ModelError;
};

class FitError : public ModelError {
  public:
    FitError(std::size_t point, const std::string& what)
        : ModelError("point " + std::to_string(point) + ": " + what), point_(point) {}

    std::size_t point() const { return point_; }

  private:
    std::size_t point_;
};

class FoldError : public ModelError {
  public:
    using ModelError::ModelError;
};

}  // namespace flexid

#endif  // FLEXID_ERRORS_HPP_

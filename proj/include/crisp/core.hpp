// Copyright 2026 The crisp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRISP_CORE_HPP_
#define CRISP_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crisp {

enum class ErrorCode {
  kDimensionMismatch,
  kEmptyMatrix,
  kNonFinite,
  kEmptyCorpus,
  kInvalidFraction,
  kInvalidSpec,
  kKTooLarge,
  kDegenerateBatch,
  kNoJudgedQueries,
  kParse,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure in the library surfaces as an Error. `row()` is set when the
// failure can be pinned to a row (token index); `subject()` carries the id of
// the offending record when known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::size_t> row = std::nullopt,
        std::string subject = {});

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::size_t>& row() const noexcept { return row_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> row_;
  std::string subject_;
};

// Dense row-major matrix of 64-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  void append_row(std::span<const double> values);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// One query's or document's token embeddings, in original token order.
struct TokenMatrix {
  std::string id;
  Matrix values;

  std::size_t size() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
  std::span<const double> row(std::size_t i) const { return values.row(i); }

  // Builds from possibly ragged rows; throws DimensionMismatch / EmptyMatrix /
  // NonFinite exactly as validate() would.
  static TokenMatrix from_rows(std::string id,
                               const std::vector<std::vector<double>>& rows);

  friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;
};

void validate(const TokenMatrix& matrix);
void validate_rows(std::string_view id,
                   const std::vector<std::vector<double>>& rows);

struct NormalizeResult {
  TokenMatrix matrix;
  // Rows whose norm was zero; they are passed through untouched.
  std::vector<std::size_t> zero_rows;
};

NormalizeResult l2_normalize(const TokenMatrix& matrix);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// Checks that every matrix in `items` shares `dim`; throws DimensionMismatch
// naming the first offending id.
void require_dim(std::span<const TokenMatrix> items, std::size_t dim);

}  // namespace crisp

#endif  // CRISP_CORE_HPP_

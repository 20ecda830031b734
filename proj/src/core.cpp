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


#include "crisp/core.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace crisp {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInvalidFraction: return "InvalidFraction";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kDegenerateBatch: return "DegenerateBatch";
    case ErrorCode::kNoJudgedQueries: return "NoJudgedQueries";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string message, std::optional<std::size_t> row,
             std::string subject)
    : std::runtime_error(std::move(message)),
      code_(code),
      row_(row),
      subject_(std::move(subject)) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "matrix data has " + std::to_string(data_.size()) +
                    " values, expected " + std::to_string(rows_ * cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix out;
  for (const auto& r : rows) out.append_row(r);
  return out;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "row " + std::to_string(rows_) + " has " +
                    std::to_string(values.size()) + " components, expected " +
                    std::to_string(cols_),
                rows_);
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

namespace {

std::string describe(std::string_view id) {
  return id.empty() ? std::string("matrix") : "matrix '" + std::string(id) + "'";
}

}  // namespace

void validate_rows(std::string_view id,
                   const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyMatrix, describe(id) + " has no rows",
                std::nullopt, std::string(id));
  }
  const std::size_t d = rows.front().size();
  if (d == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                describe(id) + " row 0 has zero components", 0,
                std::string(id));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) {
      std::ostringstream msg;
      msg << describe(id) << " row " << i << " has " << rows[i].size()
          << " components, expected " << d;
      throw Error(ErrorCode::kDimensionMismatch, msg.str(), i, std::string(id));
    }
    for (double v : rows[i]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFinite,
                    describe(id) + " row " + std::to_string(i) +
                        " has a non-finite component",
                    i, std::string(id));
      }
    }
  }
}

void validate(const TokenMatrix& matrix) {
  if (matrix.size() == 0) {
    throw Error(ErrorCode::kEmptyMatrix, describe(matrix.id) + " has no rows",
                std::nullopt, matrix.id);
  }
  if (matrix.dim() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                describe(matrix.id) + " has zero-dimensional rows", 0,
                matrix.id);
  }
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (double v : matrix.row(i)) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFinite,
                    describe(matrix.id) + " row " + std::to_string(i) +
                        " has a non-finite component",
                    i, matrix.id);
      }
    }
  }
}

TokenMatrix TokenMatrix::from_rows(std::string id,
                                   const std::vector<std::vector<double>>& rows) {
  validate_rows(id, rows);
  return TokenMatrix{std::move(id), Matrix::from_rows(rows)};
}

NormalizeResult l2_normalize(const TokenMatrix& matrix) {
  NormalizeResult out{matrix, {}};
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto row = out.matrix.values.row(i);
    const double norm = std::sqrt(dot(row, row));
    if (norm == 0.0) {
      out.zero_rows.push_back(i);
      continue;
    }
    for (double& v : row) v /= norm;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

void require_dim(std::span<const TokenMatrix> items, std::size_t dim) {
  for (const auto& item : items) {
    if (item.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "'" + item.id + "' has dimension " +
                      std::to_string(item.dim()) + ", expected " +
                      std::to_string(dim),
                  std::nullopt, item.id);
    }
  }
}

}  // namespace crisp

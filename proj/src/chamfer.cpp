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


#include "crisp/chamfer.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "crisp/parallel.hpp"

namespace crisp {
namespace {

constexpr std::size_t kQueryTile = 8;
constexpr std::size_t kDocTile = 64;

void check_pair(const TokenMatrix& query, const TokenMatrix& doc) {
  if (query.dim() != doc.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query '" + query.id + "' has dimension " +
                    std::to_string(query.dim()) + " but document '" + doc.id +
                    "' has dimension " + std::to_string(doc.dim()),
                std::nullopt, doc.id);
  }
  if (query.size() == 0) {
    throw Error(ErrorCode::kEmptyMatrix, "query '" + query.id + "' has no rows",
                std::nullopt, query.id);
  }
  if (doc.size() == 0) {
    throw Error(ErrorCode::kEmptyMatrix, "document '" + doc.id + "' has no rows",
                std::nullopt, doc.id);
  }
}

// Four independent accumulators so the compiler can keep the loop in
// registers and vectorise.
inline double dot4(const double* a, const double* b, std::size_t d) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < d; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

double chamfer_naive(const TokenMatrix& query, const TokenMatrix& doc) {
  check_pair(query, doc);
  double total = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < doc.size(); ++j) {
      double ip = 0.0;
      for (std::size_t c = 0; c < query.dim(); ++c) {
        ip += query.values(i, c) * doc.values(j, c);
      }
      if (ip > best) best = ip;
    }
    total += best;
  }
  return total;
}

double chamfer_fast(const TokenMatrix& query, const TokenMatrix& doc) {
  check_pair(query, doc);
  const std::size_t nq = query.size();
  const std::size_t nd = doc.size();
  const std::size_t d = query.dim();
  const double* q = query.values.data().data();
  const double* x = doc.values.data().data();

  std::vector<double> best(nq, -std::numeric_limits<double>::infinity());
  std::array<double, kQueryTile * kDocTile> block;
  for (std::size_t j0 = 0; j0 < nd; j0 += kDocTile) {
    const std::size_t j1 = std::min(nd, j0 + kDocTile);
    for (std::size_t i0 = 0; i0 < nq; i0 += kQueryTile) {
      const std::size_t i1 = std::min(nq, i0 + kQueryTile);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) {
          block[(i - i0) * kDocTile + (j - j0)] = dot4(q + i * d, x + j * d, d);
        }
      }
      for (std::size_t i = i0; i < i1; ++i) {
        double m = best[i];
        const double* row = block.data() + (i - i0) * kDocTile;
        for (std::size_t j = 0; j < j1 - j0; ++j) m = row[j] > m ? row[j] : m;
        best[i] = m;
      }
    }
  }
  double total = 0.0;
  for (double b : best) total += b;
  return total;
}

ChamferTrace chamfer_trace(const Matrix& query, const Matrix& doc) {
  ChamferTrace out;
  out.argmax.resize(query.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < doc.rows(); ++j) {
      const double ip = dot(query.row(i), doc.row(j));
      if (ip > best) {
        best = ip;
        arg = j;
      }
    }
    out.argmax[i] = arg;
    out.score += best;
  }
  return out;
}

std::vector<ScoredHit> chamfer_batch(const TokenMatrix& query,
                                     std::span<const TokenMatrix> corpus,
                                     std::size_t parallelism) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "corpus is empty");
  }
  require_dim(corpus, query.dim());
  std::vector<ScoredHit> hits(corpus.size());
  parallel_for(corpus.size(), parallelism, [&](std::size_t i) {
    hits[i] = ScoredHit{corpus[i].id, chamfer_fast(query, corpus[i])};
  });
  return hits;
}

}  // namespace crisp

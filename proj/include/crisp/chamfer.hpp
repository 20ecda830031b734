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


#ifndef CRISP_CHAMFER_HPP_
#define CRISP_CHAMFER_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crisp/core.hpp"

namespace crisp {

struct ScoredHit {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredHit&, const ScoredHit&) = default;
};

// Chamfer (MaxSim) similarity: sum over query rows of the largest inner
// product against any document row. Asymmetric in its arguments.
//
// chamfer_naive is the literal double loop and serves as the oracle.
// chamfer_fast computes the |Q|x|D| inner-product block tile by tile and
// reduces row maxima; both sum the per-query maxima in query-row order.
double chamfer_naive(const TokenMatrix& query, const TokenMatrix& doc);
double chamfer_fast(const TokenMatrix& query, const TokenMatrix& doc);

// Score plus, for every query row, the index of the document row that won the
// max. Ties keep the earliest document row.
struct ChamferTrace {
  double score = 0.0;
  std::vector<std::size_t> argmax;
};

ChamferTrace chamfer_trace(const Matrix& query, const Matrix& doc);

// One hit per document, in corpus order. Parallel over documents only.
std::vector<ScoredHit> chamfer_batch(const TokenMatrix& query,
                                     std::span<const TokenMatrix> corpus,
                                     std::size_t parallelism = 1);

}  // namespace crisp

#endif  // CRISP_CHAMFER_HPP_

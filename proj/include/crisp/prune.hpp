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


#ifndef CRISP_PRUNE_HPP_
#define CRISP_PRUNE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crisp/core.hpp"

namespace crisp {

enum class Strategy {
  kFull,
  kTail,             // last k rows
  kKSpace,           // rows 0, k, 2k, ...
  kClusterFixed,     // k-means with min(k, n) clusters
  kClusterRelative,  // k-means with max(1, floor(fraction * n)) clusters
};

// Text form: full | tail:K | kspace:K | cfixed:K | crel:F, optionally
// followed by "+norm". The seed is not part of the text form.
struct PruneSpec {
  Strategy strategy = Strategy::kFull;
  std::size_t k = 0;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  bool normalize = false;

  static PruneSpec full() { return {}; }
  static PruneSpec tail(std::size_t k) { return {Strategy::kTail, k}; }
  static PruneSpec kspace(std::size_t k) { return {Strategy::kKSpace, k}; }
  static PruneSpec cluster_fixed(std::size_t k, std::uint64_t seed = 0) {
    return {Strategy::kClusterFixed, k, 0.0, seed};
  }
  static PruneSpec cluster_relative(double fraction, std::uint64_t seed = 0) {
    return {Strategy::kClusterRelative, 0, fraction, seed};
  }

  static PruneSpec parse(std::string_view text);
  std::string to_string() const;

  bool is_clustering() const noexcept {
    return strategy == Strategy::kClusterFixed ||
           strategy == Strategy::kClusterRelative;
  }

  // Throws InvalidSpec (k == 0) or InvalidFraction.
  void validate() const;

  // Output row count for an n-row input.
  std::size_t output_size(std::size_t n) const;

  friend bool operator==(const PruneSpec&, const PruneSpec&) = default;
};

struct PrunedRep {
  TokenMatrix matrix;
  // Clustering only: source token index -> output row.
  std::optional<std::vector<std::size_t>> assignments;
  std::size_t source_n = 0;
  // Positional strategies (full/tail/kspace): source index of each output row.
  std::vector<std::size_t> kept;
  // Rows left untouched by normalization because their norm was zero.
  std::vector<std::size_t> zero_rows;
};

PrunedRep tail_prune(const TokenMatrix& matrix, std::size_t k);
PrunedRep kspace_prune(const TokenMatrix& matrix, std::size_t k);
PrunedRep cluster_prune_fixed(const TokenMatrix& matrix, std::size_t k,
                              std::uint64_t seed);
PrunedRep cluster_prune_relative(const TokenMatrix& matrix, double fraction,
                                 std::uint64_t seed);

// Applies l2_normalize first iff spec.normalize, then the strategy.
PrunedRep prune(const TokenMatrix& matrix, const PruneSpec& spec);

std::vector<PrunedRep> prune_corpus(std::span<const TokenMatrix> corpus,
                                    const PruneSpec& spec,
                                    std::size_t threads = 1);

// Rebuilds a pruned matrix from `source` using the structure (kept rows or
// cluster assignments) recorded in `frozen`, without re-running selection or
// clustering. Normalizes first iff `normalize`.
Matrix apply_frozen(const Matrix& source, const PrunedRep& frozen,
                    bool normalize);

}  // namespace crisp

#endif  // CRISP_PRUNE_HPP_

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


#include "crisp/prune.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

#include "crisp/kmeans.hpp"
#include "crisp/parallel.hpp"

namespace crisp {
namespace {

PrunedRep select_rows(const TokenMatrix& matrix, std::vector<std::size_t> kept) {
  PrunedRep out;
  out.source_n = matrix.size();
  out.matrix.id = matrix.id;
  out.matrix.values = Matrix(0, matrix.dim());
  for (std::size_t idx : kept) out.matrix.values.append_row(matrix.row(idx));
  out.kept = std::move(kept);
  return out;
}

std::size_t parse_count(std::string_view text, std::string_view spec) {
  std::size_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
    throw Error(ErrorCode::kInvalidSpec,
                "prune spec '" + std::string(spec) +
                    "' needs a positive integer parameter");
  }
  return value;
}

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidFraction,
                "relative cluster fraction " + std::to_string(fraction) +
                    " is outside (0, 1]");
  }
}

}  // namespace

PruneSpec PruneSpec::parse(std::string_view text) {
  const std::string_view original = text;
  PruneSpec spec;
  constexpr std::string_view kNorm = "+norm";
  if (text.size() >= kNorm.size() &&
      text.substr(text.size() - kNorm.size()) == kNorm) {
    spec.normalize = true;
    text.remove_suffix(kNorm.size());
  }
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  if (name == "full") {
    if (colon != std::string_view::npos) {
      throw Error(ErrorCode::kInvalidSpec,
                  "prune spec 'full' takes no parameter: '" +
                      std::string(original) + "'");
    }
    spec.strategy = Strategy::kFull;
    return spec;
  }
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidSpec,
                "unknown prune spec '" + std::string(original) + "'");
  }
  if (name == "tail") {
    spec.strategy = Strategy::kTail;
    spec.k = parse_count(arg, original);
  } else if (name == "kspace") {
    spec.strategy = Strategy::kKSpace;
    spec.k = parse_count(arg, original);
  } else if (name == "cfixed") {
    spec.strategy = Strategy::kClusterFixed;
    spec.k = parse_count(arg, original);
  } else if (name == "crel") {
    spec.strategy = Strategy::kClusterRelative;
    double f = 0.0;
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), f);
    if (ec != std::errc() || ptr != arg.data() + arg.size() || arg.empty()) {
      throw Error(ErrorCode::kInvalidSpec,
                  "prune spec '" + std::string(original) +
                      "' needs a real fraction");
    }
    check_fraction(f);
    spec.fraction = f;
  } else {
    throw Error(ErrorCode::kInvalidSpec,
                "unknown prune spec '" + std::string(original) + "'");
  }
  return spec;
}

std::string PruneSpec::to_string() const {
  std::string out;
  switch (strategy) {
    case Strategy::kFull: out = "full"; break;
    case Strategy::kTail: out = "tail:" + std::to_string(k); break;
    case Strategy::kKSpace: out = "kspace:" + std::to_string(k); break;
    case Strategy::kClusterFixed: out = "cfixed:" + std::to_string(k); break;
    case Strategy::kClusterRelative: {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof(buf), fraction);
      out = "crel:" + std::string(buf, res.ptr);
      break;
    }
  }
  if (normalize) out += "+norm";
  return out;
}

void PruneSpec::validate() const {
  switch (strategy) {
    case Strategy::kFull: return;
    case Strategy::kTail:
    case Strategy::kKSpace:
    case Strategy::kClusterFixed:
      if (k == 0) {
        throw Error(ErrorCode::kInvalidSpec, to_string() + " requires k >= 1");
      }
      return;
    case Strategy::kClusterRelative: check_fraction(fraction); return;
  }
}

std::size_t PruneSpec::output_size(std::size_t n) const {
  switch (strategy) {
    case Strategy::kFull: return n;
    case Strategy::kTail:
    case Strategy::kClusterFixed: return std::min(k, n);
    case Strategy::kKSpace: return (n + k - 1) / k;
    case Strategy::kClusterRelative: {
      const auto floored =
          static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
      return std::max<std::size_t>(1, floored);
    }
  }
  return n;
}

PrunedRep tail_prune(const TokenMatrix& matrix, std::size_t k) {
  validate(matrix);
  const std::size_t n = matrix.size();
  const std::size_t keep = std::min(k, n);
  std::vector<std::size_t> kept(keep);
  for (std::size_t i = 0; i < keep; ++i) kept[i] = n - keep + i;
  return select_rows(matrix, std::move(kept));
}

PrunedRep kspace_prune(const TokenMatrix& matrix, std::size_t k) {
  validate(matrix);
  if (k == 0) throw Error(ErrorCode::kInvalidSpec, "kspace requires k >= 1");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < matrix.size(); i += k) kept.push_back(i);
  return select_rows(matrix, std::move(kept));
}

PrunedRep cluster_prune_fixed(const TokenMatrix& matrix, std::size_t k,
                              std::uint64_t seed) {
  validate(matrix);
  if (k == 0) throw Error(ErrorCode::kInvalidSpec, "cfixed requires k >= 1");
  const std::size_t n = matrix.size();
  const KMeansResult km = kmeans(matrix.values, std::min(k, n), seed);

  // Emit clusters in order of their lowest-index member.
  const std::size_t m = km.centroids.rows();
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> relabel(m, kUnset);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& slot = relabel[km.assignments[i]];
    if (slot == kUnset) slot = next++;
  }

  PrunedRep out;
  out.source_n = n;
  out.matrix.id = matrix.id;
  out.matrix.values = Matrix(m, matrix.dim());
  for (std::size_t c = 0; c < m; ++c) {
    auto dst = out.matrix.values.row(relabel[c]);
    auto src = km.centroids.row(c);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  std::vector<std::size_t> assignments(n);
  for (std::size_t i = 0; i < n; ++i) assignments[i] = relabel[km.assignments[i]];
  out.assignments = std::move(assignments);
  return out;
}

PrunedRep cluster_prune_relative(const TokenMatrix& matrix, double fraction,
                                 std::uint64_t seed) {
  check_fraction(fraction);
  validate(matrix);
  const PruneSpec spec = PruneSpec::cluster_relative(fraction, seed);
  return cluster_prune_fixed(matrix, spec.output_size(matrix.size()), seed);
}

PrunedRep prune(const TokenMatrix& matrix, const PruneSpec& spec) {
  spec.validate();
  validate(matrix);
  std::vector<std::size_t> zero_rows;
  const TokenMatrix* input = &matrix;
  TokenMatrix normalized;
  if (spec.normalize) {
    NormalizeResult nr = l2_normalize(matrix);
    normalized = std::move(nr.matrix);
    zero_rows = std::move(nr.zero_rows);
    input = &normalized;
  }

  PrunedRep out;
  switch (spec.strategy) {
    case Strategy::kFull: {
      std::vector<std::size_t> all(input->size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      out = select_rows(*input, std::move(all));
      break;
    }
    case Strategy::kTail: out = tail_prune(*input, spec.k); break;
    case Strategy::kKSpace: out = kspace_prune(*input, spec.k); break;
    case Strategy::kClusterFixed:
      out = cluster_prune_fixed(*input, spec.k, spec.seed);
      break;
    case Strategy::kClusterRelative:
      out = cluster_prune_relative(*input, spec.fraction, spec.seed);
      break;
  }
  out.zero_rows = std::move(zero_rows);
  return out;
}

std::vector<PrunedRep> prune_corpus(std::span<const TokenMatrix> corpus,
                                    const PruneSpec& spec, std::size_t threads) {
  spec.validate();
  std::vector<PrunedRep> out(corpus.size());
  parallel_for(corpus.size(), threads,
               [&](std::size_t i) { out[i] = prune(corpus[i], spec); });
  return out;
}

Matrix apply_frozen(const Matrix& source, const PrunedRep& frozen,
                    bool normalize) {
  Matrix input = source;
  if (normalize) {
    for (std::size_t i = 0; i < input.rows(); ++i) {
      auto row = input.row(i);
      const double norm = std::sqrt(dot(row, row));
      if (norm == 0.0) continue;
      for (double& v : row) v /= norm;
    }
  }
  if (frozen.assignments) {
    return cluster_means(input, *frozen.assignments, frozen.matrix.size());
  }
  Matrix out(0, input.cols());
  for (std::size_t idx : frozen.kept) out.append_row(input.row(idx));
  return out;
}

}  // namespace crisp

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


#include "crisp/kmeans.hpp"

#include <limits>
#include <string>

#include "crisp/rng.hpp"

namespace crisp {

KMeansInit kmeanspp_init(const Matrix& points, std::size_t k,
                         std::uint64_t seed) {
  const std::size_t n = points.rows();
  if (k == 0) {
    throw Error(ErrorCode::kInvalidSpec, "k-means needs k >= 1");
  }
  if (k > n) {
    throw Error(ErrorCode::kKTooLarge, "k-means with k=" + std::to_string(k) +
                                           " on " + std::to_string(n) +
                                           " points");
  }
  CounterRng rng(seed);
  KMeansInit out;
  out.indices.reserve(k);
  out.centers = Matrix(0, points.cols());

  std::vector<bool> chosen(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t idx) {
    chosen[idx] = true;
    out.indices.push_back(idx);
    out.centers.append_row(points.row(idx));
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = squared_distance(points.row(i), points.row(idx));
      if (d2 < nearest[i]) nearest[i] = d2;
    }
  };

  take(rng.index(n));
  while (out.indices.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += nearest[i];
    }
    const double u = rng.uniform();
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = u * total;
      double cum = 0.0;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || nearest[i] <= 0.0) continue;
        cum += nearest[i];
        last_positive = i;
        if (cum > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = last_positive;  // rounding at the top end
    } else {
      // Only duplicates of chosen centers remain.
      const std::size_t remaining = n - out.indices.size();
      std::size_t slot = static_cast<std::size_t>(u * static_cast<double>(remaining));
      if (slot >= remaining) slot = remaining - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (slot == 0) {
          pick = i;
          break;
        }
        --slot;
      }
    }
    take(pick);
  }
  return out;
}

std::vector<std::size_t> assign_nearest(const Matrix& points,
                                        const Matrix& centers) {
  std::vector<std::size_t> out(points.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
      const double d2 = squared_distance(points.row(i), centers.row(c));
      if (d2 < best) {
        best = d2;
        out[i] = c;
      }
    }
  }
  return out;
}

Matrix cluster_means(const Matrix& points,
                     const std::vector<std::size_t>& assignments,
                     std::size_t clusters) {
  Matrix sums(clusters, points.cols());
  std::vector<std::size_t> counts(clusters, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto dst = sums.row(assignments[i]);
    auto src = points.row(i);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    ++counts[assignments[i]];
  }
  for (std::size_t j = 0; j < clusters; ++j) {
    if (counts[j] == 0) continue;
    const double inv = static_cast<double>(counts[j]);
    for (double& v : sums.row(j)) v /= inv;
  }
  return sums;
}

double clustering_sse(const Matrix& points, const Matrix& centers,
                      const std::vector<std::size_t>& assignments) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    sse += squared_distance(points.row(i), centers.row(assignments[i]));
  }
  return sse;
}

namespace {

// Gives every empty cluster one point, taken from a cluster that has at least
// two members: the point farthest from its current center, lowest index on
// ties. Returns true if anything moved.
bool repair_empty_clusters(const Matrix& points, const Matrix& centers,
                           std::vector<std::size_t>& assignments) {
  const std::size_t k = centers.rows();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assignments) ++counts[a];

  bool moved = false;
  std::vector<bool> stolen(points.rows(), false);
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] != 0) continue;
    std::size_t victim = points.rows();
    double farthest = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (stolen[i] || counts[assignments[i]] < 2) continue;
      const double d2 = squared_distance(points.row(i), centers.row(assignments[i]));
      if (d2 > farthest) {
        farthest = d2;
        victim = i;
      }
    }
    // k <= n guarantees a donor exists.
    --counts[assignments[victim]];
    assignments[victim] = j;
    counts[j] = 1;
    stolen[victim] = true;
    moved = true;
  }
  return moved;
}

}  // namespace

KMeansResult lloyd(const Matrix& points, const Matrix& init,
                   const KMeansOptions& options) {
  const std::size_t k = init.rows();
  if (k == 0) {
    throw Error(ErrorCode::kInvalidSpec, "lloyd needs at least one center");
  }
  if (k > points.rows()) {
    throw Error(ErrorCode::kKTooLarge,
                "lloyd with " + std::to_string(k) + " centers on " +
                    std::to_string(points.rows()) + " points");
  }
  if (options.max_iter == 0) {
    throw Error(ErrorCode::kInvalidSpec, "lloyd needs max_iter >= 1");
  }
  if (init.cols() != points.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial centers have dimension " + std::to_string(init.cols()) +
                    ", points have " + std::to_string(points.cols()));
  }

  KMeansResult res;
  res.centroids = init;
  res.assignments = assign_nearest(points, res.centroids);
  double previous = clustering_sse(points, res.centroids, res.assignments);
  res.sse = previous;
  res.sse_trace.push_back(previous);

  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    auto next = assign_nearest(points, res.centroids);
    repair_empty_clusters(points, res.centroids, next);
    const bool stable = it > 1 && next == res.assignments;
    res.assignments = std::move(next);
    res.centroids = cluster_means(points, res.assignments, k);
    res.sse = clustering_sse(points, res.centroids, res.assignments);
    res.iterations = it;
    res.sse_trace.push_back(res.sse);
    if (stable || previous - res.sse < options.tol) {
      res.converged = true;
      break;
    }
    previous = res.sse;
  }
  return res;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  const KMeansInit init = kmeanspp_init(points, k, seed);
  return lloyd(points, init.centers, options);
}

}  // namespace crisp

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


#ifndef CRISP_KMEANS_HPP_
#define CRISP_KMEANS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "crisp/core.hpp"

namespace crisp {

struct KMeansResult {
  Matrix centroids;                      // m x d
  std::vector<std::size_t> assignments;  // length n, values in [0, m)
  double sse = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // SSE before the first iteration followed by the SSE after each iteration.
  std::vector<double> sse_trace;
};

struct KMeansInit {
  std::vector<std::size_t> indices;  // k distinct point indices, pick order
  Matrix centers;                    // rows of `points` at `indices`
};

struct KMeansOptions {
  std::size_t max_iter = 50;
  double tol = 1e-6;  // on absolute SSE improvement per iteration
};

// k-means++ seeding driven by CounterRng(seed). The first center is uniform;
// each subsequent center is drawn with probability proportional to its squared
// distance to the nearest chosen center. If every remaining point coincides
// with a chosen center, the next pick is uniform over unchosen indices.
// Throws KTooLarge if k > n.
KMeansInit kmeanspp_init(const Matrix& points, std::size_t k,
                         std::uint64_t seed);

// Lloyd refinement from explicit initial centers. Each iteration assigns to
// the nearest center (ties to the lowest index), repairs empty clusters by
// stealing the point farthest from its current center, then moves centers to
// member means.
KMeansResult lloyd(const Matrix& points, const Matrix& init,
                   const KMeansOptions& options = {});

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

// Nearest-center assignment (ties to the lowest center index).
std::vector<std::size_t> assign_nearest(const Matrix& points,
                                        const Matrix& centers);

// Member means for a fixed assignment; clusters without members keep a zero
// row.
Matrix cluster_means(const Matrix& points,
                     const std::vector<std::size_t>& assignments,
                     std::size_t clusters);

double clustering_sse(const Matrix& points, const Matrix& centers,
                      const std::vector<std::size_t>& assignments);

}  // namespace crisp

#endif  // CRISP_KMEANS_HPP_

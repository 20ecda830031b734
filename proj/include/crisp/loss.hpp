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


#ifndef CRISP_LOSS_HPP_
#define CRISP_LOSS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crisp/core.hpp"
#include "crisp/prune.hpp"
#include "crisp/rng.hpp"

namespace crisp {

// For query i the candidates are, in this order: positives[i], positives[j]
// for j != i (ascending j), then hard_negatives[i]. Column 0 of every score
// row is therefore the positive.
struct TrainingBatch {
  std::vector<TokenMatrix> queries;
  std::vector<TokenMatrix> positives;
  std::vector<std::vector<TokenMatrix>> hard_negatives;  // empty or one list per query
  double temperature = 0.05;
  PruneSpec query_spec;
  PruneSpec doc_spec;
};

enum class ItemRole { kQuery, kPositive, kHardNegative };

struct ItemRef {
  ItemRole role = ItemRole::kQuery;
  std::size_t index = 0;
  std::size_t sub = 0;  // hard negatives only

  friend bool operator==(const ItemRef&, const ItemRef&) = default;
};

// Shaped like the batch: one n x d gradient per source matrix (or per pruned
// matrix, for the upstream gradients).
struct BatchGradients {
  std::vector<Matrix> queries;
  std::vector<Matrix> positives;
  std::vector<std::vector<Matrix>> hard_negatives;

  const Matrix& of(const ItemRef& ref) const;
  Matrix& of(const ItemRef& ref);

  // Gradient row for the first item in `batch` whose id matches.
  std::span<const double> at(const TrainingBatch& batch, std::string_view id,
                             std::size_t token) const;
};

// Pruning structure (kept rows / cluster assignments) of every item from one
// forward pass.
struct FrozenPruning {
  std::vector<PrunedRep> queries;
  std::vector<PrunedRep> positives;
  std::vector<std::vector<PrunedRep>> hard_negatives;
};

FrozenPruning freeze_pruning(const TrainingBatch& batch);

// Test seam: called with each query's candidate scores before the softmax.
using ScoreHook = std::function<void(std::size_t query, std::span<double> scores)>;

struct LossBreakdown {
  double loss = 0.0;
  std::vector<double> per_query;
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<double>> probabilities;
};

struct SoftmaxTerm {
  double loss = 0.0;
  std::vector<double> probabilities;
};

// -log softmax(scores / temperature)[positive], log-sum-exp stabilised.
SoftmaxTerm softmax_cross_entropy(std::span<const double> scores,
                                  std::size_t positive, double temperature);

// Throws DegenerateBatch / DimensionMismatch / InvalidSpec.
void validate_batch(const TrainingBatch& batch);

LossBreakdown evaluate_loss(const TrainingBatch& batch,
                            const FrozenPruning& frozen,
                            const ScoreHook& hook = {});

double contrastive_loss(const TrainingBatch& batch);

struct LossAndGradients {
  double loss = 0.0;
  BatchGradients source;  // d loss / d source token embeddings
  BatchGradients pruned;  // d loss / d pruned rows (pre pooling/selection)
};

// Chamfer argmax winners and cluster assignments are held at their
// forward-pass values.
LossAndGradients loss_and_gradients(const TrainingBatch& batch,
                                    const FrozenPruning& frozen);

BatchGradients loss_gradients(const TrainingBatch& batch);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string item_id;
  std::size_t token = 0;
  std::size_t component = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double step = 0.0;
  std::size_t samples = 0;
};

// Central differences on `samples` random coordinates, pruning structure
// frozen at the unperturbed forward pass. Relative error is
// |a - n| / (|a| + |n| + 1e-12).
GradCheckReport grad_check(const TrainingBatch& batch, double step,
                           std::size_t samples, std::uint64_t seed);

// Same protocol against caller-supplied analytic gradients.
GradCheckReport grad_check_against(const TrainingBatch& batch,
                                   const BatchGradients& analytic, double step,
                                   std::size_t samples, std::uint64_t seed);

// Plain gradient descent where the token embeddings are the parameters.
struct ParameterStore {
  std::vector<TokenMatrix> queries;
  std::vector<TokenMatrix> docs;
};

// Indices into a ParameterStore describing one training batch.
struct BatchPlan {
  std::vector<std::size_t> queries;
  std::vector<std::size_t> positives;
  std::vector<std::vector<std::size_t>> hard_negatives;
};

using BatchStream = std::function<BatchPlan(std::size_t step, CounterRng& rng)>;

struct SgdOptions {
  double learning_rate = 0.1;
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  double temperature = 0.05;
  PruneSpec query_spec;
  PruneSpec doc_spec;
  // Called after each update with (step, loss before the update, params).
  std::function<void(std::size_t, double, const ParameterStore&)> on_step;
};

struct SgdResult {
  ParameterStore params;
  std::vector<double> loss_trace;
};

TrainingBatch materialize(const ParameterStore& params, const BatchPlan& plan,
                          const SgdOptions& options);

SgdResult sgd_fit(ParameterStore params, const BatchStream& stream,
                  const SgdOptions& options);

}  // namespace crisp

#endif  // CRISP_LOSS_HPP_

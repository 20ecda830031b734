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


#include "crisp/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "crisp/chamfer.hpp"
#include "crisp/kmeans.hpp"

namespace crisp {
namespace {

// Candidate list of query i, positive first.
std::vector<ItemRef> candidates_of(const TrainingBatch& batch, std::size_t i) {
  std::vector<ItemRef> out;
  out.push_back({ItemRole::kPositive, i});
  for (std::size_t j = 0; j < batch.positives.size(); ++j) {
    if (j != i) out.push_back({ItemRole::kPositive, j});
  }
  if (!batch.hard_negatives.empty()) {
    for (std::size_t h = 0; h < batch.hard_negatives[i].size(); ++h) {
      out.push_back({ItemRole::kHardNegative, i, h});
    }
  }
  return out;
}

template <typename T>
struct Shaped {
  std::vector<T> queries;
  std::vector<T> positives;
  std::vector<std::vector<T>> hard_negatives;

  const T& of(const ItemRef& ref) const {
    switch (ref.role) {
      case ItemRole::kQuery: return queries[ref.index];
      case ItemRole::kPositive: return positives[ref.index];
      case ItemRole::kHardNegative: return hard_negatives[ref.index][ref.sub];
    }
    return queries[ref.index];
  }
};

const TokenMatrix& item(const TrainingBatch& batch, const ItemRef& ref) {
  switch (ref.role) {
    case ItemRole::kQuery: return batch.queries[ref.index];
    case ItemRole::kPositive: return batch.positives[ref.index];
    case ItemRole::kHardNegative: return batch.hard_negatives[ref.index][ref.sub];
  }
  return batch.queries[ref.index];
}

TokenMatrix& item(TrainingBatch& batch, const ItemRef& ref) {
  return const_cast<TokenMatrix&>(item(std::as_const(batch), ref));
}

const PrunedRep& frozen_of(const FrozenPruning& f, const ItemRef& ref) {
  switch (ref.role) {
    case ItemRole::kQuery: return f.queries[ref.index];
    case ItemRole::kPositive: return f.positives[ref.index];
    case ItemRole::kHardNegative: return f.hard_negatives[ref.index][ref.sub];
  }
  return f.queries[ref.index];
}

std::vector<ItemRef> all_items(const TrainingBatch& batch) {
  std::vector<ItemRef> out;
  for (std::size_t i = 0; i < batch.queries.size(); ++i) {
    out.push_back({ItemRole::kQuery, i});
  }
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    out.push_back({ItemRole::kPositive, i});
  }
  for (std::size_t i = 0; i < batch.hard_negatives.size(); ++i) {
    for (std::size_t h = 0; h < batch.hard_negatives[i].size(); ++h) {
      out.push_back({ItemRole::kHardNegative, i, h});
    }
  }
  return out;
}

BatchGradients zeros_like_sources(const TrainingBatch& batch) {
  BatchGradients g;
  for (const auto& q : batch.queries) g.queries.emplace_back(q.size(), q.dim());
  for (const auto& p : batch.positives) g.positives.emplace_back(p.size(), p.dim());
  g.hard_negatives.resize(batch.hard_negatives.size());
  for (std::size_t i = 0; i < batch.hard_negatives.size(); ++i) {
    for (const auto& h : batch.hard_negatives[i]) {
      g.hard_negatives[i].emplace_back(h.size(), h.dim());
    }
  }
  return g;
}

struct Forward {
  Shaped<Matrix> pruned;
  // traces[i][c]: Chamfer trace of query i against its c-th candidate.
  std::vector<std::vector<ChamferTrace>> traces;
  std::vector<std::vector<ItemRef>> candidates;
  LossBreakdown breakdown;
};

Forward forward(const TrainingBatch& batch, const FrozenPruning& frozen,
                const ScoreHook& hook) {
  validate_batch(batch);
  Forward fw;
  const std::size_t b = batch.queries.size();
  for (std::size_t i = 0; i < b; ++i) {
    fw.pruned.queries.push_back(apply_frozen(batch.queries[i].values,
                                             frozen.queries[i],
                                             batch.query_spec.normalize));
    fw.pruned.positives.push_back(apply_frozen(batch.positives[i].values,
                                               frozen.positives[i],
                                               batch.doc_spec.normalize));
  }
  fw.pruned.hard_negatives.resize(batch.hard_negatives.size());
  for (std::size_t i = 0; i < batch.hard_negatives.size(); ++i) {
    for (std::size_t h = 0; h < batch.hard_negatives[i].size(); ++h) {
      fw.pruned.hard_negatives[i].push_back(
          apply_frozen(batch.hard_negatives[i][h].values,
                       frozen.hard_negatives[i][h], batch.doc_spec.normalize));
    }
  }

  auto& out = fw.breakdown;
  out.per_query.resize(b);
  out.scores.resize(b);
  out.probabilities.resize(b);
  fw.traces.resize(b);
  fw.candidates.resize(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    fw.candidates[i] = candidates_of(batch, i);
    auto& scores = out.scores[i];
    for (const auto& ref : fw.candidates[i]) {
      fw.traces[i].push_back(chamfer_trace(fw.pruned.queries[i], fw.pruned.of(ref)));
      scores.push_back(fw.traces[i].back().score);
    }
    if (hook) hook(i, scores);
    SoftmaxTerm term = softmax_cross_entropy(scores, 0, batch.temperature);
    out.per_query[i] = term.loss;
    out.probabilities[i] = std::move(term.probabilities);
    total += term.loss;
  }
  out.loss = total / static_cast<double>(b);
  return fw;
}

// Pulls an upstream gradient on pruned rows back onto the source rows.
void backprop_pruning(const Matrix& source, const PrunedRep& frozen,
                      bool normalize, const Matrix& upstream, Matrix& grad) {
  Matrix pre(source.rows(), source.cols());
  if (frozen.assignments) {
    const auto& assign = *frozen.assignments;
    std::vector<std::size_t> counts(frozen.matrix.size(), 0);
    for (std::size_t a : assign) ++counts[a];
    for (std::size_t t = 0; t < source.rows(); ++t) {
      const double share = static_cast<double>(counts[assign[t]]);
      auto dst = pre.row(t);
      auto src = upstream.row(assign[t]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = src[c] / share;
    }
  } else {
    for (std::size_t r = 0; r < frozen.kept.size(); ++r) {
      auto dst = pre.row(frozen.kept[r]);
      auto src = upstream.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  }

  for (std::size_t t = 0; t < source.rows(); ++t) {
    auto dst = grad.row(t);
    auto g = pre.row(t);
    const auto x = source.row(t);
    const double norm = normalize ? std::sqrt(dot(x, x)) : 0.0;
    if (!normalize || norm == 0.0) {
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += g[c];
      continue;
    }
    // d(x/|x|) = (I - u u^T) / |x|
    double gu = 0.0;
    for (std::size_t c = 0; c < dst.size(); ++c) gu += g[c] * x[c] / norm;
    for (std::size_t c = 0; c < dst.size(); ++c) {
      dst[c] += (g[c] - gu * x[c] / norm) / norm;
    }
  }
}

}  // namespace

const Matrix& BatchGradients::of(const ItemRef& ref) const {
  switch (ref.role) {
    case ItemRole::kQuery: return queries.at(ref.index);
    case ItemRole::kPositive: return positives.at(ref.index);
    case ItemRole::kHardNegative: return hard_negatives.at(ref.index).at(ref.sub);
  }
  return queries.at(ref.index);
}

Matrix& BatchGradients::of(const ItemRef& ref) {
  return const_cast<Matrix&>(std::as_const(*this).of(ref));
}

std::span<const double> BatchGradients::at(const TrainingBatch& batch,
                                           std::string_view id,
                                           std::size_t token) const {
  for (const auto& ref : all_items(batch)) {
    if (item(batch, ref).id == id) return of(ref).row(token);
  }
  throw Error(ErrorCode::kInvalidSpec,
              "no batch item with id '" + std::string(id) + "'");
}

SoftmaxTerm softmax_cross_entropy(std::span<const double> scores,
                                  std::size_t positive, double temperature) {
  SoftmaxTerm out;
  double top = -std::numeric_limits<double>::infinity();
  for (double s : scores) top = std::max(top, s / temperature);
  double sum = 0.0;
  out.probabilities.resize(scores.size());
  for (std::size_t c = 0; c < scores.size(); ++c) {
    out.probabilities[c] = std::exp(scores[c] / temperature - top);
    sum += out.probabilities[c];
  }
  for (double& p : out.probabilities) p /= sum;
  out.loss = top + std::log(sum) - scores[positive] / temperature;
  return out;
}

void validate_batch(const TrainingBatch& batch) {
  const std::size_t b = batch.queries.size();
  if (batch.positives.size() != b) {
    throw Error(ErrorCode::kDegenerateBatch,
                "batch has " + std::to_string(b) + " queries but " +
                    std::to_string(batch.positives.size()) + " positives");
  }
  if (!batch.hard_negatives.empty() && batch.hard_negatives.size() != b) {
    throw Error(ErrorCode::kDegenerateBatch,
                "hard negatives must be given per query");
  }
  if (b == 0) throw Error(ErrorCode::kDegenerateBatch, "batch is empty");
  for (std::size_t i = 0; i < b; ++i) {
    const bool has_hard =
        !batch.hard_negatives.empty() && !batch.hard_negatives[i].empty();
    if (b == 1 && !has_hard) {
      throw Error(ErrorCode::kDegenerateBatch,
                  "query '" + batch.queries[i].id + "' has no negatives");
    }
  }
  if (!(batch.temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "temperature must be positive");
  }
  batch.query_spec.validate();
  batch.doc_spec.validate();
  const std::size_t d = batch.queries.front().dim();
  for (const auto& ref : all_items(batch)) {
    const auto& m = item(batch, ref);
    validate(m);
    if (m.dim() != d) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "'" + m.id + "' has dimension " + std::to_string(m.dim()) +
                      ", batch uses " + std::to_string(d),
                  std::nullopt, m.id);
    }
  }
}

FrozenPruning freeze_pruning(const TrainingBatch& batch) {
  validate_batch(batch);
  FrozenPruning f;
  for (const auto& q : batch.queries) f.queries.push_back(prune(q, batch.query_spec));
  for (const auto& p : batch.positives) f.positives.push_back(prune(p, batch.doc_spec));
  f.hard_negatives.resize(batch.hard_negatives.size());
  for (std::size_t i = 0; i < batch.hard_negatives.size(); ++i) {
    for (const auto& h : batch.hard_negatives[i]) {
      f.hard_negatives[i].push_back(prune(h, batch.doc_spec));
    }
  }
  return f;
}

LossBreakdown evaluate_loss(const TrainingBatch& batch,
                            const FrozenPruning& frozen, const ScoreHook& hook) {
  return forward(batch, frozen, hook).breakdown;
}

double contrastive_loss(const TrainingBatch& batch) {
  return evaluate_loss(batch, freeze_pruning(batch)).loss;
}

LossAndGradients loss_and_gradients(const TrainingBatch& batch,
                                    const FrozenPruning& frozen) {
  Forward fw = forward(batch, frozen, {});
  const std::size_t b = batch.queries.size();

  BatchGradients up;
  for (const auto& m : fw.pruned.queries) up.queries.emplace_back(m.rows(), m.cols());
  for (const auto& m : fw.pruned.positives) up.positives.emplace_back(m.rows(), m.cols());
  up.hard_negatives.resize(fw.pruned.hard_negatives.size());
  for (std::size_t i = 0; i < fw.pruned.hard_negatives.size(); ++i) {
    for (const auto& m : fw.pruned.hard_negatives[i]) {
      up.hard_negatives[i].emplace_back(m.rows(), m.cols());
    }
  }

  const double scale = 1.0 / (batch.temperature * static_cast<double>(b));
  for (std::size_t i = 0; i < b; ++i) {
    const Matrix& q = fw.pruned.queries[i];
    Matrix& gq = up.queries[i];
    for (std::size_t c = 0; c < fw.candidates[i].size(); ++c) {
      const ItemRef& ref = fw.candidates[i][c];
      const double w =
          (fw.breakdown.probabilities[i][c] - (c == 0 ? 1.0 : 0.0)) * scale;
      if (w == 0.0) continue;
      const Matrix& x = fw.pruned.of(ref);
      Matrix& gx = up.of(ref);
      const auto& argmax = fw.traces[i][c].argmax;
      for (std::size_t r = 0; r < q.rows(); ++r) {
        auto gq_row = gq.row(r);
        auto gx_row = gx.row(argmax[r]);
        const auto q_row = q.row(r);
        const auto x_row = x.row(argmax[r]);
        for (std::size_t k = 0; k < q_row.size(); ++k) {
          gq_row[k] += w * x_row[k];
          gx_row[k] += w * q_row[k];
        }
      }
    }
  }

  LossAndGradients out;
  out.loss = fw.breakdown.loss;
  out.source = zeros_like_sources(batch);
  for (const auto& ref : all_items(batch)) {
    const bool is_query = ref.role == ItemRole::kQuery;
    backprop_pruning(item(batch, ref).values, frozen_of(frozen, ref),
                     is_query ? batch.query_spec.normalize
                              : batch.doc_spec.normalize,
                     up.of(ref), out.source.of(ref));
  }
  out.pruned = std::move(up);
  return out;
}

BatchGradients loss_gradients(const TrainingBatch& batch) {
  return loss_and_gradients(batch, freeze_pruning(batch)).source;
}

GradCheckReport grad_check_against(const TrainingBatch& batch,
                                   const BatchGradients& analytic, double step,
                                   std::size_t samples, std::uint64_t seed) {
  if (!(step > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "grad_check step must be positive");
  }
  const FrozenPruning frozen = freeze_pruning(batch);
  const auto items = all_items(batch);
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& ref : items) {
    offsets.push_back(total);
    total += item(batch, ref).values.data().size();
  }

  GradCheckReport report;
  report.step = step;
  report.samples = samples;
  report.max_rel_error = -1.0;
  CounterRng rng(seed);
  TrainingBatch work = batch;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t flat = rng.index(total);
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat) - 1;
    const std::size_t which = static_cast<std::size_t>(it - offsets.begin());
    const ItemRef& ref = items[which];
    const std::size_t local = flat - *it;

    auto& values = item(work, ref).values.data();
    const double saved = values[local];
    values[local] = saved + step;
    const double plus = evaluate_loss(work, frozen).loss;
    values[local] = saved - step;
    const double minus = evaluate_loss(work, frozen).loss;
    values[local] = saved;

    const double numeric = (plus - minus) / (2.0 * step);
    const double a = analytic.of(ref).data()[local];
    const double rel =
        std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
    if (rel > report.max_rel_error) {
      const auto& m = item(batch, ref);
      report.max_rel_error = rel;
      report.item_id = m.id;
      report.token = local / m.dim();
      report.component = local % m.dim();
      report.analytic = a;
      report.numeric = numeric;
    }
  }
  report.max_rel_error = std::max(0.0, report.max_rel_error);
  return report;
}

GradCheckReport grad_check(const TrainingBatch& batch, double step,
                           std::size_t samples, std::uint64_t seed) {
  return grad_check_against(batch, loss_gradients(batch), step, samples, seed);
}

TrainingBatch materialize(const ParameterStore& params, const BatchPlan& plan,
                          const SgdOptions& options) {
  TrainingBatch batch;
  batch.temperature = options.temperature;
  batch.query_spec = options.query_spec;
  batch.doc_spec = options.doc_spec;
  for (std::size_t q : plan.queries) batch.queries.push_back(params.queries.at(q));
  for (std::size_t d : plan.positives) batch.positives.push_back(params.docs.at(d));
  for (const auto& list : plan.hard_negatives) {
    auto& dst = batch.hard_negatives.emplace_back();
    for (std::size_t d : list) dst.push_back(params.docs.at(d));
  }
  return batch;
}

SgdResult sgd_fit(ParameterStore params, const BatchStream& stream,
                  const SgdOptions& options) {
  if (options.learning_rate < 0.0) {
    throw Error(ErrorCode::kInvalidSpec, "learning rate must be nonnegative");
  }
  SgdResult out;
  CounterRng rng(options.seed);
  for (std::size_t step = 0; step < options.steps; ++step) {
    const BatchPlan plan = stream(step, rng);
    const TrainingBatch batch = materialize(params, plan, options);
    const LossAndGradients lg = loss_and_gradients(batch, freeze_pruning(batch));
    out.loss_trace.push_back(lg.loss);

    auto update = [&](TokenMatrix& param, const Matrix& grad) {
      auto& v = param.values.data();
      const auto& g = grad.data();
      for (std::size_t c = 0; c < v.size(); ++c) v[c] -= options.learning_rate * g[c];
    };
    for (std::size_t i = 0; i < plan.queries.size(); ++i) {
      update(params.queries[plan.queries[i]], lg.source.queries[i]);
    }
    for (std::size_t i = 0; i < plan.positives.size(); ++i) {
      update(params.docs[plan.positives[i]], lg.source.positives[i]);
    }
    for (std::size_t i = 0; i < plan.hard_negatives.size(); ++i) {
      for (std::size_t h = 0; h < plan.hard_negatives[i].size(); ++h) {
        update(params.docs[plan.hard_negatives[i][h]], lg.source.hard_negatives[i][h]);
      }
    }
    if (options.on_step) options.on_step(step, lg.loss, params);
  }
  out.params = std::move(params);
  return out;
}

}  // namespace crisp

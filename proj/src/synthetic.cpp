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


#include "crisp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "crisp/chamfer.hpp"
#include "crisp/prune.hpp"

namespace crisp {
namespace {

// First `take` entries of a seeded Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t take,
                                                    CounterRng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  take = std::min(take, n);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
  for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += scale * src[c];
}

Matrix unit_topics(std::size_t topics, std::size_t dim, double scale,
                   CounterRng& rng) {
  Matrix out = gaussian_matrix(topics, dim, rng);
  for (std::size_t t = 0; t < topics; ++t) {
    auto row = out.row(t);
    const double norm = std::sqrt(dot(row, row));
    for (double& v : row) v *= scale / norm;
  }
  return out;
}

// `rows` tokens, each center + N(0, noise^2 / dim) per component.
Matrix noisy_copies(std::span<const double> center, std::size_t rows,
                    double noise, CounterRng& rng) {
  const std::size_t dim = center.size();
  const double sd = noise / std::sqrt(static_cast<double>(dim));
  Matrix out(rows, dim);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < dim; ++c) row[c] = center[c] + rng.normal(0.0, sd);
  }
  return out;
}

}  // namespace

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, CounterRng& rng,
                       double stddev) {
  Matrix out(rows, cols);
  for (double& v : out.data()) v = rng.normal(0.0, stddev);
  return out;
}

std::vector<TokenMatrix> gaussian_corpus(std::size_t count, std::size_t min_rows,
                                         std::size_t max_rows, std::size_t dim,
                                         const std::string& prefix,
                                         std::uint64_t seed, double stddev) {
  CounterRng rng(seed);
  std::vector<TokenMatrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t rows = min_rows + rng.index(max_rows - min_rows + 1);
    out.push_back({prefix + std::to_string(i), gaussian_matrix(rows, dim, rng, stddev)});
  }
  return out;
}

PlantedBlobs planted_blobs(const Matrix& centers, std::size_t per_cluster,
                           double sigma, std::uint64_t seed) {
  CounterRng rng(seed);
  PlantedBlobs out;
  out.points = Matrix(0, centers.cols());
  std::vector<double> p(centers.cols());
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    for (std::size_t i = 0; i < per_cluster; ++i) {
      const auto center = centers.row(c);
      for (std::size_t j = 0; j < p.size(); ++j) p[j] = center[j] + rng.normal(0.0, sigma);
      out.points.append_row(p);
      out.labels.push_back(c);
    }
  }
  return out;
}

TrainingBatch random_training_batch(std::uint64_t seed, const PruneSpec& query_spec,
                                    const PruneSpec& doc_spec,
                                    const RandomBatchOptions& options) {
  CounterRng rng(seed);
  TrainingBatch batch;
  batch.temperature = options.temperature;
  batch.query_spec = query_spec;
  batch.doc_spec = doc_spec;
  for (std::size_t i = 0; i < options.batch_size; ++i) {
    batch.queries.push_back(
        {"q" + std::to_string(i),
         gaussian_matrix(options.query_tokens, options.dim, rng, options.stddev)});
    batch.positives.push_back(
        {"p" + std::to_string(i),
         gaussian_matrix(options.doc_tokens, options.dim, rng, options.stddev)});
  }
  if (options.hard_negatives > 0) {
    batch.hard_negatives.resize(options.batch_size);
    for (std::size_t i = 0; i < options.batch_size; ++i) {
      for (std::size_t h = 0; h < options.hard_negatives; ++h) {
        batch.hard_negatives[i].push_back(
            {"n" + std::to_string(i) + "_" + std::to_string(h),
             gaussian_matrix(options.doc_tokens, options.dim, rng, options.stddev)});
      }
    }
  }
  return batch;
}

ToyTask make_toy_task(std::uint64_t seed, const ToyTaskOptions& options) {
  if (options.docs < options.queries || options.topics == 0) {
    throw Error(ErrorCode::kInvalidSpec, "toy task needs docs >= queries and topics >= 1");
  }
  CounterRng rng(seed);
  const Matrix topics = unit_topics(options.topics, options.dim, options.topic_scale, rng);

  ToyTask task;
  task.batch_size = options.batch_size;
  task.hard_negatives = options.hard_negatives;
  task.distractors.resize(options.topics);
  for (std::size_t i = 0; i < options.queries; ++i) {
    const std::size_t t = i % options.topics;
    task.query_topic.push_back(t);
    task.positive.push_back(i);
    task.params.queries.push_back(
        {"q" + std::to_string(i),
         noisy_copies(topics.row(t), options.query_tokens, options.noise, rng)});
  }
  for (std::size_t j = 0; j < options.docs; ++j) {
    const std::size_t t = j % options.topics;
    task.doc_topic.push_back(t);
    if (j >= options.queries) task.distractors[t].push_back(j);
    task.params.docs.push_back(
        {"d" + std::to_string(j),
         noisy_copies(topics.row(t), options.doc_tokens, options.noise, rng)});
  }
  return task;
}

BatchStream toy_batch_stream(const ToyTask& task) {
  return [task](std::size_t, CounterRng& rng) {
    BatchPlan plan;
    plan.queries = sample_without_replacement(task.params.queries.size(),
                                              task.batch_size, rng);
    for (std::size_t q : plan.queries) {
      plan.positives.push_back(task.positive[q]);
      const auto& pool = task.distractors[task.query_topic[q]];
      auto& hard = plan.hard_negatives.emplace_back();
      for (std::size_t idx :
           sample_without_replacement(pool.size(), task.hard_negatives, rng)) {
        hard.push_back(pool[idx]);
      }
    }
    return plan;
  };
}

double toy_top1_accuracy(const ParameterStore& params,
                         const std::vector<std::size_t>& positive,
                         const PruneSpec& query_spec, const PruneSpec& doc_spec) {
  const auto docs = prune_corpus(params.docs, doc_spec);
  std::vector<TokenMatrix> pruned_docs;
  for (const auto& d : docs) pruned_docs.push_back(d.matrix);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < params.queries.size(); ++i) {
    const PrunedRep q = prune(params.queries[i], query_spec);
    auto hits = chamfer_batch(q.matrix, pruned_docs);
    sort_hits(hits);
    if (hits.front().doc_id == params.docs[positive[i]].id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(params.queries.size());
}

DenoisingCorpus make_denoising_corpus(std::uint64_t seed,
                                      const DenoisingOptions& options) {
  CounterRng rng(seed);
  const Matrix topics = unit_topics(options.topics, options.dim, 1.0, rng);

  // Distinct topic sets per document.
  std::set<std::vector<std::size_t>> used;
  DenoisingCorpus out;
  std::vector<std::vector<std::size_t>> doc_topics;
  while (doc_topics.size() < options.docs) {
    auto pick = sample_without_replacement(options.topics, options.topics_per_doc, rng);
    if (!used.insert(pick).second) continue;
    doc_topics.push_back(pick);
  }

  for (std::size_t j = 0; j < options.docs; ++j) {
    TokenMatrix doc{"doc" + std::to_string(j), Matrix(0, options.dim)};
    for (std::size_t t : doc_topics[j]) {
      const Matrix group =
          noisy_copies(topics.row(t), options.tokens_per_topic, options.jitter, rng);
      for (std::size_t r = 0; r < group.rows(); ++r) doc.values.append_row(group.row(r));
    }
    std::vector<double> token(options.dim);
    for (std::size_t r = 0; r < options.noise_tokens; ++r) {
      const std::size_t t = rng.index(options.topics);
      const double scale = rng.uniform(options.noise_lo, options.noise_hi);
      std::fill(token.begin(), token.end(), 0.0);
      add_scaled(token, topics.row(t), scale);
      doc.values.append_row(token);
    }
    out.docs.push_back(std::move(doc));
  }

  for (std::size_t i = 0; i < std::min(options.queries, options.docs); ++i) {
    TokenMatrix query{"query" + std::to_string(i), Matrix(0, options.dim)};
    for (std::size_t t : doc_topics[i]) {
      const Matrix tok = noisy_copies(topics.row(t), 1, options.jitter, rng);
      query.values.append_row(tok.row(0));
    }
    out.qrels[query.id][out.docs[i].id] = 1;
    out.queries.push_back(std::move(query));
  }
  return out;
}

}  // namespace crisp

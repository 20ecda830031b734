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


#ifndef CRISP_SYNTHETIC_HPP_
#define CRISP_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crisp/core.hpp"
#include "crisp/eval.hpp"
#include "crisp/loss.hpp"
#include "crisp/rng.hpp"

namespace crisp {

// Seeded synthetic data. Everything here draws from CounterRng only, so the
// same seed yields the same data on every platform.

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, CounterRng& rng,
                       double stddev = 1.0);

// `count` matrices with ids "<prefix><i>", row counts uniform in
// [min_rows, max_rows], N(0, stddev^2) components.
std::vector<TokenMatrix> gaussian_corpus(std::size_t count, std::size_t min_rows,
                                         std::size_t max_rows, std::size_t dim,
                                         const std::string& prefix,
                                         std::uint64_t seed, double stddev = 1.0);

struct PlantedBlobs {
  Matrix points;
  std::vector<std::size_t> labels;  // index into centers
};

// `per_cluster` isotropic Gaussian points around each center, grouped by
// center in order.
PlantedBlobs planted_blobs(const Matrix& centers, std::size_t per_cluster,
                           double sigma, std::uint64_t seed);

struct RandomBatchOptions {
  std::size_t batch_size = 3;
  std::size_t query_tokens = 6;
  std::size_t doc_tokens = 12;
  std::size_t dim = 8;
  std::size_t hard_negatives = 1;
  double temperature = 1.0;
  double stddev = 0.5;
};

// Random Gaussian training batch for gradient checking.
TrainingBatch random_training_batch(std::uint64_t seed, const PruneSpec& query_spec,
                                    const PruneSpec& doc_spec,
                                    const RandomBatchOptions& options = {});

// Planted retrieval task for the training demonstrator: `topics` latent
// topics, queries.size() queries, docs.size() documents. Query i is paired with
// document i; the remaining documents are distractors sharing a topic with
// some queries. Initially every same-topic document looks alike, so the pairing
// has to be learned.
struct ToyTask {
  ParameterStore params;
  std::vector<std::size_t> query_topic;
  std::vector<std::size_t> doc_topic;
  std::vector<std::size_t> positive;  // query index -> doc index
  // Same-topic distractor documents per topic.
  std::vector<std::vector<std::size_t>> distractors;
  std::size_t batch_size = 0;
  std::size_t hard_negatives = 0;
};

struct ToyTaskOptions {
  std::size_t topics = 3;
  std::size_t queries = 30;
  std::size_t docs = 90;
  std::size_t dim = 16;
  std::size_t query_tokens = 6;
  std::size_t doc_tokens = 12;
  double topic_scale = 1.0;
  double noise = 0.5;
  // Full batches: every query with all of its same-topic distractors.
  std::size_t batch_size = 30;
  std::size_t hard_negatives = 20;
};

ToyTask make_toy_task(std::uint64_t seed, const ToyTaskOptions& options = {});

// Batches of `batch_size` distinct queries (uniform without replacement) with
// their paired documents plus `hard_negatives` same-topic distractors each.
// Sampled indices are listed in ascending order.
BatchStream toy_batch_stream(const ToyTask& task);

// Fraction of queries whose top-ranked document (over the whole toy corpus)
// is their paired document.
double toy_top1_accuracy(const ParameterStore& params,
                         const std::vector<std::size_t>& positive,
                         const PruneSpec& query_spec, const PruneSpec& doc_spec);

// Retrieval corpus where every document holds `topics_per_doc` topic groups
// (tight copies of a topic vector) plus `noise_tokens` i.i.d. noise tokens,
// each a copy of a uniformly drawn topic scaled by U(noise_lo, noise_hi).
// Every document has a distinct topic set; query i is made of the topic
// vectors of document i (its single relevant document).
struct DenoisingCorpus {
  std::vector<TokenMatrix> docs;
  std::vector<TokenMatrix> queries;
  Qrels qrels;
};

struct DenoisingOptions {
  std::size_t topics = 12;
  std::size_t topics_per_doc = 3;
  std::size_t docs = 200;
  std::size_t queries = 50;
  std::size_t dim = 32;
  std::size_t tokens_per_topic = 6;
  std::size_t noise_tokens = 2;
  double jitter = 0.05;
  double noise_lo = 0.8;
  double noise_hi = 1.2;
};

DenoisingCorpus make_denoising_corpus(std::uint64_t seed,
                                      const DenoisingOptions& options = {});

}  // namespace crisp

#endif  // CRISP_SYNTHETIC_HPP_

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


#ifndef CRISP_EVAL_HPP_
#define CRISP_EVAL_HPP_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crisp/chamfer.hpp"
#include "crisp/core.hpp"
#include "crisp/prune.hpp"

namespace crisp {

// query id -> doc id -> relevance grade (>= 0).
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct QueryRun {
  std::string query_id;
  std::vector<ScoredHit> hits;  // descending score, ties by ascending doc id
};

// Queries in input order.
struct RunList {
  std::vector<QueryRun> queries;
};

// Descending score, ascending doc id on ties.
void sort_hits(std::vector<ScoredHit>& hits);

// Scores already-pruned representations; returns the top_k hits.
std::vector<ScoredHit> search_pruned(const TokenMatrix& query,
                                     std::span<const TokenMatrix> corpus,
                                     std::size_t top_k, std::size_t threads = 1);

// Prunes the query and every document, then ranks by Chamfer similarity.
QueryRun search(const TokenMatrix& query, std::span<const TokenMatrix> corpus,
                const PruneSpec& query_spec, const PruneSpec& doc_spec,
                std::size_t top_k, std::size_t threads = 1);

RunList search_all(std::span<const TokenMatrix> queries,
                   std::span<const TokenMatrix> corpus,
                   const PruneSpec& query_spec, const PruneSpec& doc_spec,
                   std::size_t top_k, std::size_t threads = 1);

struct NdcgReport {
  double mean = 0.0;
  std::map<std::string, double> per_query;
  // Run queries without any positive judgment.
  std::size_t skipped = 0;
};

// Exponential gain (2^rel - 1), log2(rank + 1) discount. Hits are re-sorted
// by score before cutting at k, so the result depends only on the ranking.
// Throws NoJudgedQueries if no run query has a positive judgment.
NdcgReport ndcg_at_k(const RunList& run, const Qrels& qrels, std::size_t k);

struct EvalReport {
  NdcgReport ndcg;
  double rel_doc_size = 0.0;
  double rel_query_size = 0.0;
};

EvalReport evaluate(std::span<const TokenMatrix> corpus,
                    std::span<const TokenMatrix> queries, const Qrels& qrels,
                    const PruneSpec& query_spec, const PruneSpec& doc_spec,
                    std::size_t k = 10, std::size_t threads = 1);

// TREC formats. Qrels lines: "<qid> 0 <docid> <grade>". Run lines:
// "<qid> Q0 <docid> <rank> <score> <tag>" with 6-decimal scores.
Qrels read_qrels(std::istream& in);
RunList read_run(std::istream& in);
void write_run(std::ostream& out, const RunList& run, const std::string& tag);

}  // namespace crisp

#endif  // CRISP_EVAL_HPP_

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


#include "crisp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "crisp/parallel.hpp"

namespace crisp {
namespace {

Error parse_error(std::size_t line, const std::string& what) {
  return Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what,
               line);
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

void sort_hits(std::vector<ScoredHit>& hits) {
  std::sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
}

std::vector<ScoredHit> search_pruned(const TokenMatrix& query,
                                     std::span<const TokenMatrix> corpus,
                                     std::size_t top_k, std::size_t threads) {
  std::vector<ScoredHit> hits = chamfer_batch(query, corpus, threads);
  sort_hits(hits);
  if (hits.size() > top_k) hits.resize(top_k);
  return hits;
}

QueryRun search(const TokenMatrix& query, std::span<const TokenMatrix> corpus,
                const PruneSpec& query_spec, const PruneSpec& doc_spec,
                std::size_t top_k, std::size_t threads) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus is empty");
  const auto pruned_docs = prune_corpus(corpus, doc_spec, threads);
  std::vector<TokenMatrix> docs;
  docs.reserve(pruned_docs.size());
  for (const auto& p : pruned_docs) docs.push_back(p.matrix);
  const PrunedRep q = prune(query, query_spec);
  return QueryRun{query.id, search_pruned(q.matrix, docs, top_k, threads)};
}

RunList search_all(std::span<const TokenMatrix> queries,
                   std::span<const TokenMatrix> corpus,
                   const PruneSpec& query_spec, const PruneSpec& doc_spec,
                   std::size_t top_k, std::size_t threads) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus is empty");
  const std::size_t d = corpus.front().dim();
  require_dim(corpus, d);
  require_dim(queries, d);
  const auto pruned_docs = prune_corpus(corpus, doc_spec, threads);
  const auto pruned_queries = prune_corpus(queries, query_spec, threads);
  std::vector<TokenMatrix> docs;
  docs.reserve(pruned_docs.size());
  for (const auto& p : pruned_docs) docs.push_back(p.matrix);

  RunList run;
  run.queries.resize(queries.size());
  // Parallel over queries; each query scores its documents sequentially, so
  // every score is computed identically regardless of the thread count.
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    run.queries[i] = QueryRun{queries[i].id,
                              search_pruned(pruned_queries[i].matrix, docs, top_k, 1)};
  });
  return run;
}

NdcgReport ndcg_at_k(const RunList& run, const Qrels& qrels, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidSpec, "ndcg cutoff must be >= 1");
  NdcgReport report;
  double sum = 0.0;
  for (const auto& qr : run.queries) {
    const auto judged = qrels.find(qr.query_id);
    std::vector<int> ideal;
    if (judged != qrels.end()) {
      for (const auto& [doc, grade] : judged->second) {
        if (grade > 0) ideal.push_back(grade);
      }
    }
    if (ideal.empty()) {
      ++report.skipped;
      continue;
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
      idcg += (std::exp2(ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }

    std::vector<ScoredHit> hits = qr.hits;
    sort_hits(hits);
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, hits.size()); ++i) {
      const auto g = judged->second.find(hits[i].doc_id);
      if (g == judged->second.end() || g->second <= 0) continue;
      dcg += (std::exp2(g->second) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    const double value = dcg / idcg;
    report.per_query[qr.query_id] = value;
    sum += value;
  }
  if (report.per_query.empty()) {
    throw Error(ErrorCode::kNoJudgedQueries,
                "no run query has a positive relevance judgment");
  }
  report.mean = sum / static_cast<double>(report.per_query.size());
  return report;
}

EvalReport evaluate(std::span<const TokenMatrix> corpus,
                    std::span<const TokenMatrix> queries, const Qrels& qrels,
                    const PruneSpec& query_spec, const PruneSpec& doc_spec,
                    std::size_t k, std::size_t threads) {
  EvalReport report;
  const RunList run = search_all(queries, corpus, query_spec, doc_spec, k, threads);
  report.ndcg = ndcg_at_k(run, qrels, k);

  auto rel_size = [](std::span<const TokenMatrix> items, const PruneSpec& spec) {
    double kept = 0.0;
    double total = 0.0;
    for (const auto& m : items) {
      kept += static_cast<double>(spec.output_size(m.size()));
      total += static_cast<double>(m.size());
    }
    return kept / total;
  };
  report.rel_doc_size = rel_size(corpus, doc_spec);
  report.rel_query_size = rel_size(queries, query_spec);
  return report;
}

Qrels read_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    std::istringstream fields(line);
    std::string qid, iter, doc, grade_text, extra;
    if (!(fields >> qid >> iter >> doc >> grade_text) || (fields >> extra)) {
      throw parse_error(lineno, "expected '<query_id> 0 <doc_id> <grade>'");
    }
    std::size_t used = 0;
    int grade = 0;
    try {
      grade = std::stoi(grade_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != grade_text.size()) {
      throw parse_error(lineno, "grade '" + grade_text + "' is not an integer");
    }
    if (grade < 0) throw parse_error(lineno, "negative grade");
    qrels[qid][doc] = grade;
  }
  return qrels;
}

RunList read_run(std::istream& in) {
  RunList run;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::set<std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    std::istringstream fields(line);
    std::string qid, q0, doc, rank, score_text, tag;
    if (!(fields >> qid >> q0 >> doc >> rank >> score_text >> tag)) {
      throw parse_error(lineno,
                        "expected '<query_id> Q0 <doc_id> <rank> <score> <tag>'");
    }
    double score = 0.0;
    std::size_t used = 0;
    try {
      score = std::stod(score_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != score_text.size() || !std::isfinite(score)) {
      throw parse_error(lineno, "score '" + score_text + "' is not a finite number");
    }
    auto [it, inserted] = slot.try_emplace(qid, run.queries.size());
    if (inserted) {
      run.queries.push_back(QueryRun{qid, {}});
      seen.emplace_back();
    }
    if (!seen[it->second].insert(doc).second) {
      throw parse_error(lineno, "duplicate document '" + doc + "' for query '" + qid + "'");
    }
    run.queries[it->second].hits.push_back(ScoredHit{doc, score});
  }
  for (auto& qr : run.queries) sort_hits(qr.hits);
  return run;
}

void write_run(std::ostream& out, const RunList& run, const std::string& tag) {
  char score[64];
  for (const auto& qr : run.queries) {
    for (std::size_t r = 0; r < qr.hits.size(); ++r) {
      std::snprintf(score, sizeof(score), "%.6f", qr.hits[r].score);
      out << qr.query_id << " Q0 " << qr.hits[r].doc_id << ' ' << (r + 1) << ' '
          << score << ' ' << tag << '\n';
    }
  }
}

}  // namespace crisp

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


#include "crisp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "crisp/core.hpp"

namespace crisp {

double table_rel_size(double avg_tokens, std::size_t k) {
  if (!(avg_tokens > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "average token count must be positive");
  }
  return static_cast<double>(k) / avg_tokens;
}

double table_averages(std::span<const double> avg_tokens, std::size_t k) {
  if (avg_tokens.empty()) {
    throw Error(ErrorCode::kInvalidSpec, "no rows to average");
  }
  double sum = 0.0;
  for (double a : avg_tokens) sum += table_rel_size(a, k);
  return sum / static_cast<double>(avg_tokens.size());
}

double compression_rate(double rel_size) {
  if (!(rel_size > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "relative size must be positive");
  }
  return 1.0 / rel_size;
}

double kspace_realized_rel_size(std::size_t n, std::size_t k) {
  if (n == 0 || k == 0) {
    throw Error(ErrorCode::kInvalidSpec, "kspace size needs n >= 1 and k >= 1");
  }
  return static_cast<double>((n + k - 1) / k) / static_cast<double>(n);
}

std::vector<TaskTokens> read_token_stats(std::istream& in) {
  std::vector<TaskTokens> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    TaskTokens row;
    std::string extra;
    if (!(fields >> row.task >> row.avg_doc_tokens >> row.avg_query_tokens) ||
        (fields >> extra)) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(lineno) +
                      ": expected '<task> <avg_doc_tokens> <avg_query_tokens>'",
                  lineno);
    }
    if (!(row.avg_doc_tokens > 0.0) || !(row.avg_query_tokens > 0.0) ||
        !std::isfinite(row.avg_doc_tokens) || !std::isfinite(row.avg_query_tokens)) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(lineno) +
                      ": token averages must be positive and finite",
                  lineno);
    }
    out.push_back(std::move(row));
  }
  return out;
}

StatsTable build_stats_table(std::span<const TaskTokens> tasks,
                             std::size_t k_doc, std::size_t k_query) {
  if (tasks.empty()) throw Error(ErrorCode::kInvalidSpec, "no tasks");
  StatsTable t;
  t.k_doc = k_doc;
  t.k_query = k_query;
  std::vector<double> docs, queries;
  for (const auto& task : tasks) {
    t.rows.push_back(StatsRow{task.task, task.avg_doc_tokens,
                              task.avg_query_tokens,
                              table_rel_size(task.avg_doc_tokens, k_doc),
                              table_rel_size(task.avg_query_tokens, k_query)});
    docs.push_back(task.avg_doc_tokens);
    queries.push_back(task.avg_query_tokens);
  }
  const double n = static_cast<double>(tasks.size());
  for (double v : docs) t.avg_doc_tokens += v / n;
  for (double v : queries) t.avg_query_tokens += v / n;
  t.doc_rel = table_averages(docs, k_doc);
  t.query_rel = table_averages(queries, k_query);
  t.doc_compression = compression_rate(t.doc_rel);
  t.query_compression = compression_rate(t.query_rel);
  return t;
}

void write_stats_text(std::ostream& out, const StatsTable& t) {
  std::size_t width = 7;  // "Average"
  for (const auto& r : t.rows) width = std::max(width, r.task.size());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %10s  %10s  %10s  %10s\n",
                static_cast<int>(width), "task", "doc_tokens", "doc_rel",
                "qry_tokens", "qry_rel");
  out << buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof(buf), "%-*s  %10.2f  %10.3f  %10.2f  %10.3f\n",
                  static_cast<int>(width), r.task.c_str(), r.avg_doc_tokens,
                  r.doc_rel, r.avg_query_tokens, r.query_rel);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-*s  %10.2f  %10.3f  %10.2f  %10.3f\n",
                static_cast<int>(width), "Average", t.avg_doc_tokens, t.doc_rel,
                t.avg_query_tokens, t.query_rel);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "k_doc=%zu k_query=%zu doc_compression=%.2fx "
                "query_compression=%.2fx\n",
                t.k_doc, t.k_query, t.doc_compression, t.query_compression);
  out << buf;
}

void write_stats_tsv(std::ostream& out, const StatsTable& t) {
  out << "task\tavg_doc_tokens\tdoc_rel_size\tavg_query_tokens\tquery_rel_size\n";
  char buf[256];
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.2f\t%.6f\t%.2f\t%.6f\n",
                  r.task.c_str(), r.avg_doc_tokens, r.doc_rel,
                  r.avg_query_tokens, r.query_rel);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "Average\t%.2f\t%.6f\t%.2f\t%.6f\n",
                t.avg_doc_tokens, t.doc_rel, t.avg_query_tokens, t.query_rel);
  out << buf;
}

}  // namespace crisp

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


#ifndef CRISP_STATS_HPP_
#define CRISP_STATS_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace crisp {

// Average token counts for one benchmark task.
struct TaskTokens {
  std::string task;
  double avg_doc_tokens = 0.0;
  double avg_query_tokens = 0.0;
};

// Published-table convention: k / avg_tokens, not capped at 1, so a task
// whose average is below k reports a relative size above 1.
double table_rel_size(double avg_tokens, std::size_t k);

// Unweighted mean of table_rel_size over the rows.
double table_averages(std::span<const double> avg_tokens, std::size_t k);

double compression_rate(double rel_size);

// Realized relative size of keeping every k-th token of an n-token item:
// ceil(n / k) / n. Always <= 1 and >= 1/k.
double kspace_realized_rel_size(std::size_t n, std::size_t k);

// "<task> <avg_doc_tokens> <avg_query_tokens>" per line; '#' starts a comment.
// Throws Error(kParse) naming the line on malformed input.
std::vector<TaskTokens> read_token_stats(std::istream& in);

struct StatsRow {
  std::string task;
  double avg_doc_tokens = 0.0;
  double avg_query_tokens = 0.0;
  double doc_rel = 0.0;
  double query_rel = 0.0;
};

struct StatsTable {
  std::size_t k_doc = 0;
  std::size_t k_query = 0;
  std::vector<StatsRow> rows;
  double avg_doc_tokens = 0.0;
  double avg_query_tokens = 0.0;
  double doc_rel = 0.0;
  double query_rel = 0.0;
  double doc_compression = 0.0;
  double query_compression = 0.0;
};

StatsTable build_stats_table(std::span<const TaskTokens> tasks,
                             std::size_t k_doc, std::size_t k_query);

void write_stats_text(std::ostream& out, const StatsTable& table);
void write_stats_tsv(std::ostream& out, const StatsTable& table);

}  // namespace crisp

#endif  // CRISP_STATS_HPP_

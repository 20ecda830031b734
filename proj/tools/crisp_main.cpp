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


// crisp command-line tool.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crisp/core.hpp"
#include "crisp/eval.hpp"
#include "crisp/io.hpp"
#include "crisp/loss.hpp"
#include "crisp/prune.hpp"
#include "crisp/stats.hpp"
#include "crisp/synthetic.hpp"

namespace {

using crisp::Error;
using crisp::ErrorCode;

// Diagnostics are one line: error: code=<Name> [id=<id>] [row=<n>] message="..."
std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  return text;
}

void report(std::string_view code, const std::string& message,
            const std::string& subject = {},
            std::optional<std::size_t> row = std::nullopt) {
  std::string line = "error: code=" + std::string(code);
  if (!subject.empty()) line += " id=" + one_line(subject);
  if (row) line += " row=" + std::to_string(*row);
  line += " message=\"" + one_line(message) + "\"\n";
  std::cerr << line;
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::kParse || code == ErrorCode::kIo ? 2 : 1;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return in;
}

// "-" writes to stdout.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  fn(out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

crisp::PruneSpec parse_spec(const std::string& text, std::uint64_t seed) {
  crisp::PruneSpec spec = crisp::PruneSpec::parse(text);
  spec.seed = seed;
  return spec;
}

crisp::EmbeddingFormat resolve_format(const std::string& name,
                                      const std::string& path) {
  if (name == "jsonl") return crisp::EmbeddingFormat::kJsonl;
  if (name == "binary") return crisp::EmbeddingFormat::kBinary;
  return crisp::format_for_path(path);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6e", v);
  return buf;
}

struct PruneArgs {
  std::string in, out, spec, assign, format = "auto";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

int run_prune(const PruneArgs& a) {
  const crisp::PruneSpec spec = parse_spec(a.spec, a.seed);
  spec.validate();
  const auto records = crisp::read_embeddings(a.in);
  const auto pruned = crisp::prune_corpus(records, spec, a.threads);

  std::vector<crisp::TokenMatrix> out;
  out.reserve(pruned.size());
  std::size_t rows_in = 0, rows_out = 0;
  for (std::size_t i = 0; i < pruned.size(); ++i) {
    out.push_back(pruned[i].matrix);
    rows_in += records[i].size();
    rows_out += pruned[i].matrix.size();
  }
  crisp::write_embeddings(a.out, out, resolve_format(a.format, a.out));

  if (spec.is_clustering()) {
    const std::string sidecar = a.assign.empty() ? a.out + ".assign" : a.assign;
    with_output(sidecar, [&](std::ostream& os) {
      for (std::size_t i = 0; i < pruned.size(); ++i)
        crisp::write_assignments(os, records[i].id, *pruned[i].assignments);
    });
  }
  std::cout << "records " << records.size() << " rows " << rows_in << " -> "
            << rows_out << " spec " << spec.to_string() << "\n";
  return 0;
}

struct SearchArgs {
  std::string queries, corpus, qspec = "full", dspec = "full", out = "-";
  std::string tag = "crisp";
  std::size_t topk = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

int run_search(const SearchArgs& a) {
  const crisp::PruneSpec qspec = parse_spec(a.qspec, a.seed);
  const crisp::PruneSpec dspec = parse_spec(a.dspec, a.seed);
  qspec.validate();
  dspec.validate();
  const auto queries = crisp::read_embeddings(a.queries);
  const auto corpus = crisp::read_embeddings(a.corpus);
  const crisp::RunList run =
      crisp::search_all(queries, corpus, qspec, dspec, a.topk, a.threads);
  with_output(a.out, [&](std::ostream& os) { crisp::write_run(os, run, a.tag); });
  return 0;
}

struct EvalArgs {
  std::string run, qrels;
  std::size_t k = 10;
};

int run_eval(const EvalArgs& a) {
  auto run_in = open_input(a.run);
  auto qrels_in = open_input(a.qrels);
  const crisp::RunList run = crisp::read_run(run_in);
  const crisp::Qrels qrels = crisp::read_qrels(qrels_in);
  const crisp::NdcgReport report = crisp::ndcg_at_k(run, qrels, a.k);
  const std::string metric = "ndcg@" + std::to_string(a.k);
  for (const auto& q : run.queries) {
    auto it = report.per_query.find(q.query_id);
    if (it != report.per_query.end())
      std::cout << q.query_id << '\t' << metric << '\t' << fixed(it->second, 4)
                << '\n';
  }
  std::cout << "all\t" << metric << '\t' << fixed(report.mean, 4) << '\n';
  std::cout << "all\tskipped\t" << report.skipped << '\n';
  return 0;
}

struct StatsArgs {
  std::string tokens;
  std::size_t k_doc = 32, k_query = 8;
  bool tsv = false;
};

int run_stats(const StatsArgs& a) {
  auto in = open_input(a.tokens);
  const auto tasks = crisp::read_token_stats(in);
  const auto table = crisp::build_stats_table(tasks, a.k_doc, a.k_query);
  if (a.tsv)
    crisp::write_stats_tsv(std::cout, table);
  else
    crisp::write_stats_text(std::cout, table);
  return 0;
}

struct ClustersArgs {
  std::string in, spec, match, match_spec;
  std::uint64_t seed = 0;
};

int run_clusters(const ClustersArgs& a) {
  const crisp::PruneSpec spec = parse_spec(a.spec, a.seed);
  spec.validate();
  if (!spec.is_clustering())
    throw Error(ErrorCode::kInvalidSpec,
                "clusters needs a clustering spec, got '" + spec.to_string() + "'");
  std::optional<crisp::PruneSpec> match_spec;
  if (!a.match.empty()) {
    match_spec = parse_spec(a.match_spec.empty() ? a.spec : a.match_spec, a.seed);
    match_spec->validate();
    if (!match_spec->is_clustering())
      throw Error(ErrorCode::kInvalidSpec,
                  "--match-spec must be a clustering spec, got '" +
                      match_spec->to_string() + "'");
  }

  const auto records = crisp::read_embeddings(a.in);
  std::vector<crisp::TokenMatrix> others;
  std::vector<crisp::PrunedRep> other_reps;
  if (match_spec) {
    others = crisp::read_embeddings(a.match);
    if (!records.empty()) crisp::require_dim(others, records.front().dim());
    other_reps = crisp::prune_corpus(others, *match_spec);
  }

  for (const auto& record : records) {
    const crisp::PrunedRep rep = crisp::prune(record, spec);
    const auto& assign = *rep.assignments;
    const std::size_t m = rep.matrix.size();
    std::cout << "record " << record.id << " tokens " << record.size()
              << " clusters " << m << '\n';
    for (std::size_t c = 0; c < m; ++c) {
      std::cout << "cluster " << record.id << ' ' << c << " tokens";
      for (std::size_t t = 0; t < assign.size(); ++t)
        if (assign[t] == c) std::cout << ' ' << t;
      std::cout << '\n';
    }
    if (!match_spec) continue;
    // Best centroid over every cluster of every matched record; ties keep the
    // earliest record, then the lowest cluster index.
    for (std::size_t c = 0; c < m; ++c) {
      const auto centroid = rep.matrix.row(c);
      const std::string* best_id = nullptr;
      std::size_t best_cluster = 0;
      double best = 0.0;
      for (std::size_t r = 0; r < other_reps.size(); ++r) {
        const auto& other = other_reps[r].matrix;
        for (std::size_t j = 0; j < other.size(); ++j) {
          const double s = crisp::dot(centroid, other.row(j));
          if (best_id == nullptr || s > best) {
            best = s;
            best_id = &others[r].id;
            best_cluster = j;
          }
        }
      }
      if (best_id == nullptr) continue;
      std::cout << "match " << record.id << ' ' << c << ' ' << *best_id << ' '
                << best_cluster << ' ' << fixed(best, 6) << '\n';
    }
  }
  return 0;
}

struct GradCheckArgs {
  std::string qspec = "full", dspec = "full";
  std::uint64_t seed = 0;
  double step = 1e-5;
  std::size_t samples = 64;
  double temperature = 1.0;
};

int run_gradcheck(const GradCheckArgs& a) {
  const crisp::PruneSpec qspec = parse_spec(a.qspec, a.seed);
  const crisp::PruneSpec dspec = parse_spec(a.dspec, a.seed);
  qspec.validate();
  dspec.validate();
  crisp::RandomBatchOptions opts;
  opts.temperature = a.temperature;
  const auto batch = crisp::random_training_batch(a.seed, qspec, dspec, opts);
  const auto r = crisp::grad_check(batch, a.step, a.samples, a.seed);
  const bool ok = r.max_rel_error < 1e-4;
  std::cout << "max_rel_error " << sci(r.max_rel_error) << '\n'
            << "item " << r.item_id << '\n'
            << "token " << r.token << '\n'
            << "component " << r.component << '\n'
            << "analytic " << sci(r.analytic) << '\n'
            << "numeric " << sci(r.numeric) << '\n'
            << "step " << sci(r.step) << '\n'
            << "samples " << r.samples << '\n'
            << "status " << (ok ? "PASS" : "FAIL") << '\n';
  if (!ok) {
    report("GradCheckFailed",
           "max_rel_error " + sci(r.max_rel_error) + " >= 1e-4", r.item_id,
           r.token);
    return 1;
  }
  return 0;
}

struct TrainToyArgs {
  std::string qspec = "cfixed:2", dspec = "cfixed:4";
  std::uint64_t seed = 11;
  std::size_t steps = 200;
  double lr = 0.1;
  double temperature = 0.05;
};

int run_traintoy(const TrainToyArgs& a) {
  const crisp::ToyTask task = crisp::make_toy_task(a.seed);
  crisp::SgdOptions opts;
  opts.learning_rate = a.lr;
  opts.steps = a.steps;
  opts.seed = a.seed;
  opts.temperature = a.temperature;
  opts.query_spec = parse_spec(a.qspec, a.seed);
  opts.doc_spec = parse_spec(a.dspec, a.seed);
  opts.query_spec.validate();
  opts.doc_spec.validate();
  const double before = crisp::toy_top1_accuracy(task.params, task.positive,
                                                 opts.query_spec, opts.doc_spec);
  opts.on_step = [](std::size_t step, double loss, const crisp::ParameterStore&) {
    std::cout << "step " << step << " loss " << fixed(loss, 9) << '\n';
  };
  const crisp::SgdResult result =
      crisp::sgd_fit(task.params, crisp::toy_batch_stream(task), opts);
  const double after = crisp::toy_top1_accuracy(result.params, task.positive,
                                                opts.query_spec, opts.doc_spec);
  std::cout << "accuracy_initial " << fixed(before, 4) << '\n'
            << "accuracy_final " << fixed(after, 4) << '\n';
  return 0;
}

struct ConvertArgs {
  std::string in, out, format = "auto";
};

int run_convert(const ConvertArgs& a) {
  const auto records = crisp::read_embeddings(a.in);
  crisp::write_embeddings(a.out, records, resolve_format(a.format, a.out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crisp: multi-vector Chamfer retrieval with token pruning"};
  app.require_subcommand(1);
  const auto formats = CLI::IsMember({"auto", "jsonl", "binary"});

  PruneArgs prune;
  auto* p = app.add_subcommand("prune", "Prune every record of an embedding file");
  p->add_option("--in", prune.in, "Input embedding file")->required();
  p->add_option("--out", prune.out, "Output embedding file")->required();
  p->add_option("--spec", prune.spec, "Prune spec")->required()->envname("CRISP_SPEC");
  p->add_option("--seed", prune.seed, "Clustering seed")->envname("CRISP_SEED");
  p->add_option("--threads", prune.threads, "Worker threads")
      ->envname("CRISP_THREADS")->check(CLI::PositiveNumber);
  p->add_option("--assign", prune.assign, "Assignments sidecar (default <out>.assign)");
  p->add_option("--format", prune.format, "Output format")->check(formats);

  SearchArgs search;
  auto* s = app.add_subcommand("search", "Brute-force Chamfer search to a TREC run");
  s->add_option("--queries", search.queries, "Query embedding file")->required();
  s->add_option("--corpus", search.corpus, "Corpus embedding file")->required();
  s->add_option("--qspec", search.qspec, "Query prune spec")->envname("CRISP_QSPEC");
  s->add_option("--dspec", search.dspec, "Document prune spec")->envname("CRISP_DSPEC");
  s->add_option("--topk", search.topk, "Hits per query")
      ->envname("CRISP_TOPK")->check(CLI::PositiveNumber);
  s->add_option("--out", search.out, "Run file ('-' for stdout)");
  s->add_option("--tag", search.tag, "Run tag")->envname("CRISP_TAG");
  s->add_option("--seed", search.seed, "Clustering seed")->envname("CRISP_SEED");
  s->add_option("--threads", search.threads, "Worker threads")
      ->envname("CRISP_THREADS")->check(CLI::PositiveNumber);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "NDCG@k of a run against qrels");
  e->add_option("--run", eval.run, "TREC run file")->required();
  e->add_option("--qrels", eval.qrels, "TREC qrels file")->required();
  e->add_option("--k", eval.k, "Cutoff")->envname("CRISP_K")->check(CLI::PositiveNumber);

  StatsArgs stats;
  auto* st = app.add_subcommand("stats", "Relative representation sizes");
  st->add_option("--tokens", stats.tokens, "Token statistics file")
      ->required()->envname("CRISP_TOKENS");
  st->add_option("--k-doc", stats.k_doc, "Kept document vectors")
      ->envname("CRISP_K_DOC")->check(CLI::PositiveNumber);
  st->add_option("--k-query", stats.k_query, "Kept query vectors")
      ->envname("CRISP_K_QUERY")->check(CLI::PositiveNumber);
  st->add_flag("--tsv", stats.tsv, "Tab-separated output");

  ClustersArgs clusters;
  auto* c = app.add_subcommand("clusters", "Dump cluster membership");
  c->add_option("--in", clusters.in, "Embedding file")->required();
  c->add_option("--spec", clusters.spec, "Clustering spec")->required();
  c->add_option("--seed", clusters.seed, "Clustering seed")->envname("CRISP_SEED");
  c->add_option("--match", clusters.match, "Embedding file to match clusters against");
  c->add_option("--match-spec", clusters.match_spec, "Clustering spec for --match");

  GradCheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of the loss gradients");
  g->add_option("--seed", gc.seed, "Batch and sampling seed")->envname("CRISP_SEED");
  g->add_option("--step", gc.step, "Central-difference step");
  g->add_option("--samples", gc.samples, "Sampled coordinates")->check(CLI::PositiveNumber);
  g->add_option("--qspec", gc.qspec, "Query prune spec");
  g->add_option("--dspec", gc.dspec, "Document prune spec");
  g->add_option("--temperature", gc.temperature, "Softmax temperature");

  TrainToyArgs toy;
  auto* t = app.add_subcommand("traintoy", "Train free embeddings on the planted toy task");
  t->add_option("--steps", toy.steps, "SGD steps");
  t->add_option("--lr", toy.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  t->add_option("--seed", toy.seed, "Task and sampling seed")->envname("CRISP_SEED");
  t->add_option("--qspec", toy.qspec, "Query prune spec");
  t->add_option("--dspec", toy.dspec, "Document prune spec");
  t->add_option("--temperature", toy.temperature, "Softmax temperature");

  ConvertArgs conv;
  auto* cv = app.add_subcommand("convert", "Convert between JSONL and binary embeddings");
  cv->add_option("--in", conv.in, "Input embedding file")->required();
  cv->add_option("--out", conv.out, "Output embedding file")->required();
  cv->add_option("--format", conv.format, "Output format")->check(formats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    report("Usage", ex.what());
    return 2;
  }

  try {
    if (p->parsed()) return run_prune(prune);
    if (s->parsed()) return run_search(search);
    if (e->parsed()) return run_eval(eval);
    if (st->parsed()) return run_stats(stats);
    if (c->parsed()) return run_clusters(clusters);
    if (g->parsed()) return run_gradcheck(gc);
    if (t->parsed()) return run_traintoy(toy);
    if (cv->parsed()) return run_convert(conv);
  } catch (const Error& ex) {
    report(crisp::error_code_name(ex.code()), ex.what(), ex.subject(), ex.row());
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    report("Internal", ex.what());
    return 1;
  }
  return 2;
}

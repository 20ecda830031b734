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


#include <algorithm>
#include <map>
#include <sstream>

#include "cli_support.hpp"
#include "crisp/io.hpp"
#include "crisp/synthetic.hpp"
#include "doctest.h"
#include "oracles.hpp"

using crisp::TokenMatrix;

namespace {

void put(const cli::Sandbox& box, const std::string& file,
         const std::vector<TokenMatrix>& records) {
  crisp::write_embeddings(box.path(file), records);
}

// Diagnostics are exactly one line starting with "error: code=".
void check_diagnostic(const cli::Result& r, const std::string& code) {
  CHECK(cli::count_lines(r.err) == 1);
  CHECK(r.err.rfind("error: code=" + code, 0) == 0);
}

TokenMatrix groups(const std::string& id, const std::vector<std::vector<double>>& centers,
                   std::size_t per_group, double jitter, std::uint64_t seed) {
  crisp::CounterRng rng(seed);
  crisp::Matrix m(0, centers.front().size());
  for (const auto& c : centers)
    for (std::size_t t = 0; t < per_group; ++t) {
      auto row = c;
      for (double& v : row) v += jitter * rng.normal();
      m.append_row(row);
    }
  return {id, m};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("prune: sizes, sidecar and determinism") {
  cli::Sandbox box("prune");
  crisp::CounterRng rng(1);
  put(box, "in.jsonl", {oracle::random_tokens(rng, 20, 4, "a"), oracle::random_tokens(rng, 100, 4, "b")});

  auto r = box.run("prune --in in.jsonl --out tail.jsonl --spec tail:8");
  REQUIRE(r.code == 0);
  auto out = crisp::read_embeddings(box.path("tail.jsonl"));
  CHECK(out[0].size() == 8);
  CHECK(!std::filesystem::exists(box.path("tail.jsonl.assign")));

  r = box.run("prune --in in.jsonl --out crel.bin --spec crel:0.25 --seed 3");
  REQUIRE(r.code == 0);
  out = crisp::read_embeddings(box.path("crel.bin"));
  CHECK(out[1].size() == 25);
  CHECK(out[0].size() == 5);
  const std::string sidecar = box.read("crel.bin.assign");
  CHECK(cli::count_lines(sidecar) == 120);
  CHECK(sidecar.rfind("a 0 0\n", 0) == 0);

  REQUIRE(box.run("prune --in in.jsonl --out c1.bin --spec cfixed:32 --seed 7").code == 0);
  REQUIRE(box.run("prune --in in.jsonl --out c2.bin --spec cfixed:32 --seed 7 --threads 8").code == 0);
  CHECK(box.read("c1.bin") == box.read("c2.bin"));
  CHECK(box.read("c1.bin.assign") == box.read("c2.bin.assign"));
  REQUIRE(box.run("prune --in in.jsonl --out c3.bin --spec cfixed:32", "CRISP_SEED=7").code == 0);
  CHECK(box.read("c3.bin") == box.read("c1.bin"));
  REQUIRE(box.run("prune --in in.jsonl --out c4.bin --spec cfixed:32 --seed 8", "CRISP_SEED=7").code == 0);
  CHECK(box.read("c4.bin.assign") != box.read("c1.bin.assign"));
}

TEST_CASE("prune: error exits") {
  cli::Sandbox box("prune_err");
  box.write("bad.jsonl", "{\"id\":\"a\",\"vectors\":[[1,2]]}\n{\"id\":\"b\",\"vectors\":[[1,2]\n");
  box.write("ok.jsonl", "{\"id\":\"a\",\"vectors\":[[1,2]]}\n");
  auto r = box.run("prune --in bad.jsonl --out o.jsonl --spec full");
  CHECK(r.code == 2);
  check_diagnostic(r, "Parse");
  CHECK(r.err.find("line 2 byte") != std::string::npos);
  r = box.run("prune --in ok.jsonl --out o.jsonl --spec crel:2");
  CHECK(r.code == 1);
  check_diagnostic(r, "InvalidFraction");
  r = box.run("prune --in ok.jsonl --out o.jsonl --spec nope:3");
  CHECK(r.code == 1);
  check_diagnostic(r, "InvalidSpec");
  r = box.run("prune --in ok.jsonl --out o.jsonl");
  CHECK(r.code == 2);
  check_diagnostic(r, "Usage");
  r = box.run("prune --in missing.jsonl --out o.jsonl --spec full");
  CHECK(r.code == 2);
  check_diagnostic(r, "Io");
  r = box.run("");
  CHECK(r.code == 2);
}

TEST_CASE("search: oracle order, topk, threads and dimension errors") {
  cli::Sandbox box("search");
  const std::vector<TokenMatrix> docs{TokenMatrix::from_rows("a", {{1, 0}, {0, 0.5}}),
                                      TokenMatrix::from_rows("b", {{0.25, 0.25}}),
                                      TokenMatrix::from_rows("c", {{2, -1}, {0, 1}})};
  const std::vector<TokenMatrix> queries{TokenMatrix::from_rows("q1", {{1, 0}, {0, 1}}),
                                         TokenMatrix::from_rows("q2", {{-1, 0}})};
  put(box, "docs.jsonl", docs);
  put(box, "queries.jsonl", queries);
  auto r = box.run("search --queries queries.jsonl --corpus docs.jsonl --topk 3 --out run.txt --tag t");
  REQUIRE(r.code == 0);
  // q1 scores: c = 3, a = 1.5, b = 0.5.
  std::istringstream in(box.read("run.txt"));
  std::map<std::string, std::vector<std::pair<std::string, double>>> lines;
  std::string qid, q0, doc, tag;
  int rank;
  double score;
  while (in >> qid >> q0 >> doc >> rank >> score >> tag) lines[qid].push_back({doc, score});
  REQUIRE(lines["q1"].size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& d = *std::find_if(docs.begin(), docs.end(), [&](auto& m) { return m.id == lines["q1"][i].first; });
    CHECK(lines["q1"][i].second == doctest::Approx(oracle::chamfer(queries[0], d)).epsilon(1e-6));
  }
  CHECK(lines["q1"][0].first == "c");
  CHECK(lines["q1"][1].first == "a");
  CHECK(lines["q1"][2].first == "b");

  r = box.run("search --queries queries.jsonl --corpus docs.jsonl --topk 1 --out -");
  REQUIRE(r.code == 0);
  CHECK(cli::count_lines(r.out) == 2);

  const auto corpus = crisp::gaussian_corpus(80, 4, 40, 8, "d", 5);
  const auto qs = crisp::gaussian_corpus(10, 3, 12, 8, "q", 6);
  put(box, "big.bin", corpus);
  put(box, "bq.jsonl", qs);
  const std::string base = "search --queries bq.jsonl --corpus big.bin --qspec cfixed:4 --dspec crel:0.25 --seed 2 --topk 10";
  REQUIRE(box.run(base + " --threads 1 --out t1.txt").code == 0);
  REQUIRE(box.run(base + " --threads 8 --out t8.txt").code == 0);
  REQUIRE(box.run(base + " --out env.txt", "CRISP_THREADS=3").code == 0);
  CHECK(box.read("t1.txt") == box.read("t8.txt"));
  CHECK(box.read("t1.txt") == box.read("env.txt"));
  CHECK(cli::count_lines(box.read("t1.txt")) == 100);

  put(box, "wide.jsonl", {TokenMatrix::from_rows("wide-q", {{1, 2, 3}})});
  r = box.run("search --queries wide.jsonl --corpus docs.jsonl --out x.txt");
  CHECK(r.code == 1);
  check_diagnostic(r, "DimensionMismatch");
  CHECK(r.err.find("id=") != std::string::npos);
}

TEST_CASE("eval: ideal, hand-derived and unjudged") {
  cli::Sandbox box("eval");
  box.write("qrels.txt", "q 0 A 2\nq 0 B 1\n");
  box.write("rev.txt", "q Q0 B 1 2.0 t\nq Q0 A 2 1.0 t\n");
  box.write("ideal.txt", "q Q0 A 1 2.0 t\nq Q0 B 2 1.0 t\n");
  box.write("empty.txt", "");
  auto r = box.run("eval --run rev.txt --qrels qrels.txt");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("all\tndcg@10\t0.7967\n") != std::string::npos);
  CHECK(r.out.find("q\tndcg@10\t0.7967\n") != std::string::npos);
  CHECK(r.out.find("all\tskipped\t0\n") != std::string::npos);
  r = box.run("eval --run ideal.txt --qrels qrels.txt --k 10");
  CHECK(r.out.find("all\tndcg@10\t1.0000\n") != std::string::npos);
  r = box.run("eval --run ideal.txt --qrels empty.txt");
  CHECK(r.code == 1);
  check_diagnostic(r, "NoJudgedQueries");
  box.write("broken.txt", "q Q0 A 1 2.0 t\nq Q0 B\n");
  r = box.run("eval --run broken.txt --qrels qrels.txt");
  CHECK(r.code == 2);
  check_diagnostic(r, "Parse");
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("stats: shipped file and malformed input") {
  cli::Sandbox box("stats");
  auto r = box.run("stats --tokens '" CRISP_DATA_DIR "/beir_token_stats.txt' --k-doc 8 --k-query 4 --tsv");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Average\t165.37\t0.090704\t46.58\t0.127857") != std::string::npos);
  r = box.run("stats --k-doc 32 --k-query 8", "CRISP_TOKENS='" CRISP_DATA_DIR "/beir_token_stats.txt'");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("quora") != std::string::npos);
  CHECK(r.out.find("2.169") != std::string::npos);
  box.write("one.txt", "solo 100 10\n");
  r = box.run("stats --tokens one.txt --k-doc 25 --k-query 5 --tsv");
  CHECK(r.out.find("solo\t100.00\t0.250000\t10.00\t0.500000") != std::string::npos);
  box.write("bad.txt", "solo 100 10\nbroken 5\n");
  r = box.run("stats --tokens bad.txt --k-doc 8 --k-query 4");
  CHECK(r.code == 2);
  check_diagnostic(r, "Parse");
  CHECK(r.err.find("row=2") != std::string::npos);
}

TEST_CASE("clusters: groups, duplicates and planted matches") {
  cli::Sandbox box("clusters");
  const std::vector<double> A{5, 0, 0, 0}, B{0, 5, 0, 0}, C{0, 0, 5, 0};
  put(box, "q.jsonl", {groups("q", {A, B, C}, 4, 0.05, 1)});
  put(box, "d.jsonl", {groups("noise", {{0.1, 0.1, 0.1, 0.1}}, 3, 0.01, 4),
                       groups("pos", {C, A, B}, 4, 0.05, 2)});
  auto r = box.run("clusters --in q.jsonl --spec cfixed:3 --seed 1");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("record q tokens 12 clusters 3\n") != std::string::npos);
  CHECK(r.out.find("cluster q 0 tokens 0 1 2 3\n") != std::string::npos);
  CHECK(r.out.find("cluster q 1 tokens 4 5 6 7\n") != std::string::npos);
  CHECK(r.out.find("cluster q 2 tokens 8 9 10 11\n") != std::string::npos);

  r = box.run("clusters --in q.jsonl --spec cfixed:3 --seed 1 --match d.jsonl --match-spec cfixed:3");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("match q 0 pos 1 ") != std::string::npos);
  CHECK(r.out.find("match q 1 pos 2 ") != std::string::npos);
  CHECK(r.out.find("match q 2 pos 0 ") != std::string::npos);

  put(box, "same.jsonl", {TokenMatrix::from_rows("s", {{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}})});
  r = box.run("clusters --in same.jsonl --spec cfixed:2 --seed 4");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("clusters 2") != std::string::npos);
  const auto pruned = crisp::prune(crisp::read_embeddings(box.path("same.jsonl"))[0],
                                   crisp::PruneSpec::cluster_fixed(2, 4));
  CHECK(pruned.matrix.values.row(0)[0] == pruned.matrix.values.row(1)[0]);

  r = box.run("clusters --in q.jsonl --spec tail:3");
  CHECK(r.code == 1);
  check_diagnostic(r, "InvalidSpec");
}

TEST_CASE("gradcheck and traintoy") {
  cli::Sandbox box("train");
  auto r = box.run("gradcheck --qspec cfixed:4 --dspec cfixed:8");
  CHECK(r.code == 0);
  CHECK(r.out.find("status PASS") != std::string::npos);
  r = box.run("gradcheck --seed 3 --step 1e-5 --samples 64");
  CHECK(r.code == 0);
  r = box.run("traintoy --lr 0 --steps 4");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string first_loss, line;
  int lines = 0;
  while (std::getline(in, line)) {
    if (line.rfind("step ", 0) != 0) continue;
    const std::string value = line.substr(line.rfind(' ') + 1);
    if (lines++ == 0) first_loss = value;
    CHECK(value == first_loss);
  }
  CHECK(lines == 4);
  CHECK(r.out.find("accuracy_final") != std::string::npos);
  r = box.run("traintoy --lr -1");
  CHECK(r.code == 2);
}

TEST_CASE("convert round trips both ways") {
  cli::Sandbox box("convert");
  put(box, "a.jsonl", crisp::gaussian_corpus(12, 1, 9, 5, "r", 8));
  REQUIRE(box.run("convert --in a.jsonl --out a.bin").code == 0);
  REQUIRE(box.run("convert --in a.bin --out b.jsonl").code == 0);
  REQUIRE(box.run("convert --in a.jsonl --out c.dat --format binary").code == 0);
  CHECK(box.read("a.jsonl") == box.read("b.jsonl"));
  CHECK(box.read("c.dat") == box.read("a.bin"));
  CHECK(box.read("a.bin").substr(0, 4) == "CRSP");
}

}  // TEST_SUITE

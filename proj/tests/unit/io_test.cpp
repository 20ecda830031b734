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


#include <filesystem>
#include <sstream>

#include "crisp/io.hpp"
#include "crisp/synthetic.hpp"
#include "doctest.h"
#include "oracles.hpp"

using crisp::TokenMatrix;

namespace {

std::string jsonl_of(const std::vector<TokenMatrix>& records) {
  std::ostringstream out;
  crisp::write_jsonl(out, records);
  return out.str();
}

std::string binary_of(const std::vector<TokenMatrix>& records) {
  std::ostringstream out;
  crisp::write_binary(out, records);
  return out.str();
}

std::vector<TokenMatrix> from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return crisp::read_jsonl(in);
}

std::vector<TokenMatrix> from_binary(const std::string& bytes) {
  std::istringstream in(bytes);
  return crisp::read_binary(in);
}

std::string parse_message(auto&& fn) {
  try {
    fn();
  } catch (const crisp::Error& e) {
    CHECK(e.code() == crisp::ErrorCode::kParse);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("crisp_io_test_" + name);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("binary layout is little-endian and exact") {
  const std::vector<TokenMatrix> recs{TokenMatrix::from_rows("ab", {{1.0, -2.0}})};
  const std::string bytes = binary_of(recs);
  const std::string expected{
      'C', 'R', 'S', 'P',                              // magic
      1, 0,                                            // version
      2, 0, 0, 0,                                      // dim
      1, 0, 0, 0, 0, 0, 0, 0,                          // count
      2, 0, 'a', 'b',                                  // id
      1, 0, 0, 0,                                      // rows
      0, 0, static_cast<char>(0x80), 0x3f,             // 1.0f
      0, 0, 0, static_cast<char>(0xc0)};               // -2.0f
  CHECK(bytes == expected);
}

TEST_CASE("values are quantized to 32-bit floats on read") {
  const auto recs = from_jsonl("{\"id\":\"x\",\"vectors\":[[0.1,0.2]]}\n");
  CHECK(recs[0].values(0, 0) == static_cast<double>(0.1f));
  CHECK(recs[0].values(0, 1) == static_cast<double>(0.2f));
  CHECK(jsonl_of(recs) == "{\"id\":\"x\",\"vectors\":[[0.1,0.2]]}\n");
}

TEST_CASE("JSONL -> binary -> JSONL is lossless") {
  auto corpus = crisp::gaussian_corpus(25, 1, 20, 7, "doc-", 4, 3.0);
  corpus.push_back(TokenMatrix::from_rows("caf\xc3\xa9 \"quoted\"", {{1e-30, -0.0, 3.4e38, 1, 2, 3, 4}}));
  const std::string text = jsonl_of(corpus);
  const auto parsed = from_jsonl(text);
  const auto via_binary = from_binary(binary_of(parsed));
  CHECK(via_binary == parsed);
  CHECK(jsonl_of(via_binary) == text);
  REQUIRE(parsed.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(parsed[i].id == corpus[i].id);
    REQUIRE(parsed[i].size() == corpus[i].size());
    for (std::size_t j = 0; j < corpus[i].values.data().size(); ++j)
      CHECK(parsed[i].values.data()[j] ==
            static_cast<double>(static_cast<float>(corpus[i].values.data()[j])));
  }
}

TEST_CASE("JSONL diagnostics carry line and byte") {
  const std::string good = "{\"id\":\"a\",\"vectors\":[[1,2]]}\n";
  auto msg = parse_message([&] { from_jsonl(good + "{\"id\":\"b\",\"vectors\":[[1,2]\n"); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("byte") != std::string::npos);
  msg = parse_message([&] { from_jsonl(good + good); });
  CHECK(msg.find("duplicate") != std::string::npos);
  msg = parse_message([&] { from_jsonl(good + "{\"id\":\"c\",\"vectors\":[[1,2,3]]}\n"); });
  CHECK(msg.find("line 2") != std::string::npos);
  msg = parse_message([&] { from_jsonl("{\"id\":\"c\",\"vectors\":[[1,2],[3]]}\n"); });
  CHECK(msg.find("row 1") != std::string::npos);
  parse_message([&] { from_jsonl("{\"id\":\"c\",\"vectors\":[]}\n"); });
  parse_message([&] { from_jsonl("{\"id\":7,\"vectors\":[[1]]}\n"); });
  parse_message([&] { from_jsonl("{\"id\":\"c\",\"vectors\":[[\"x\"]]}\n"); });
  CHECK(from_jsonl("\n  \n" + good).size() == 1);
}

TEST_CASE("binary diagnostics carry the byte offset") {
  const std::vector<TokenMatrix> recs{TokenMatrix::from_rows("ab", {{1.0, -2.0}}),
                                      TokenMatrix::from_rows("cd", {{3.0, 4.0}})};
  const std::string bytes = binary_of(recs);
  auto msg = parse_message([&] { from_binary(bytes.substr(0, bytes.size() - 3)); });
  CHECK(msg.find("byte") != std::string::npos);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  parse_message([&] { from_binary(bad_magic); });
  std::string bad_version = bytes;
  bad_version[4] = 2;
  CHECK(parse_message([&] { from_binary(bad_version); }).find("byte 4") != std::string::npos);
  std::string dup = bytes;
  dup[dup.size() - 8 - 4 - 2] = 'a';  // second id "cd" -> "ad"
  dup[dup.size() - 8 - 4 - 1] = 'b';  // -> "ab"
  CHECK(parse_message([&] { from_binary(dup); }).find("duplicate") != std::string::npos);
  std::string nan = bytes;
  nan[nan.size() - 1] = static_cast<char>(0x7f);
  nan[nan.size() - 2] = static_cast<char>(0xc0);
  parse_message([&] { from_binary(nan); });
}

TEST_CASE("files: format detection and writers") {
  const auto corpus = crisp::gaussian_corpus(5, 2, 6, 3, "r", 1);
  const auto jpath = temp_path("a.jsonl");
  const auto bpath = temp_path("a.bin");
  crisp::write_embeddings(jpath, corpus);
  crisp::write_embeddings(bpath, corpus);
  CHECK(oracle::slurp(bpath.string()).substr(0, 4) == "CRSP");
  CHECK(oracle::slurp(jpath.string())[0] == '{');
  CHECK(crisp::read_embeddings(jpath) == crisp::read_embeddings(bpath));
  const auto forced = temp_path("b.jsonl");
  crisp::write_embeddings(forced, corpus, crisp::EmbeddingFormat::kBinary);
  CHECK(crisp::read_embeddings(forced) == crisp::read_embeddings(bpath));
  CHECK(crisp::format_for_path("x.crsp") == crisp::EmbeddingFormat::kBinary);
  CHECK(crisp::format_for_path("x.json") == crisp::EmbeddingFormat::kJsonl);
  try {
    crisp::read_embeddings(temp_path("missing.bin"));
    FAIL("no throw");
  } catch (const crisp::Error& e) {
    CHECK(e.code() == crisp::ErrorCode::kIo);
  }
  for (const auto& p : {jpath, bpath, forced}) std::filesystem::remove(p);
}

TEST_CASE("assignment sidecar lines") {
  std::ostringstream out;
  const std::vector<std::size_t> a{0, 0, 1};
  crisp::write_assignments(out, "doc", a);
  CHECK(out.str() == "doc 0 0\ndoc 1 0\ndoc 2 1\n");
}

}  // TEST_SUITE

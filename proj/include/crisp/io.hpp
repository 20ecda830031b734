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


#ifndef CRISP_IO_HPP_
#define CRISP_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crisp/core.hpp"

namespace crisp {

// Embedding files carry values at 32-bit precision. Readers round every
// component to float (then widen to double); writers emit the float value,
// so JSONL -> binary -> JSONL is lossless.
//
// JSONL: one record per line, {"id": "...", "vectors": [[...], ...]}.
//
// Binary (all integers little-endian):
//   "CRSP" | u16 version (=1) | u32 dim | u64 record count |
//   per record: u16 id length | id bytes (UTF-8) | u32 row count |
//               row-major f32 values
enum class EmbeddingFormat { kJsonl, kBinary };

inline constexpr char kBinaryMagic[4] = {'C', 'R', 'S', 'P'};
inline constexpr std::uint16_t kBinaryVersion = 1;

// Malformed input throws Error(kParse) with a line (JSONL) or byte offset
// (binary) in the message. Records must share a dimension and have unique ids.
std::vector<TokenMatrix> read_jsonl(std::istream& in);
std::vector<TokenMatrix> read_binary(std::istream& in);

void write_jsonl(std::ostream& out, std::span<const TokenMatrix> records);
void write_binary(std::ostream& out, std::span<const TokenMatrix> records);

// Detects the format from the leading magic bytes.
std::vector<TokenMatrix> read_embeddings(const std::filesystem::path& path);

// ".bin" and ".crsp" select binary; anything else is JSONL.
EmbeddingFormat format_for_path(const std::filesystem::path& path);

void write_embeddings(const std::filesystem::path& path,
                      std::span<const TokenMatrix> records);
void write_embeddings(const std::filesystem::path& path,
                      std::span<const TokenMatrix> records,
                      EmbeddingFormat format);

// Sidecar lines "<id> <token_index> <cluster_index>".
void write_assignments(std::ostream& out, const std::string& id,
                       std::span<const std::size_t> assignments);

// Shortest decimal text that round-trips the float value of `v`.
std::string format_float(float v);

}  // namespace crisp

#endif  // CRISP_IO_HPP_

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


#include "crisp/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"

namespace crisp {
namespace {

using nlohmann::json;

Error parse_error(const std::string& what, std::optional<std::size_t> where = {}) {
  return Error(ErrorCode::kParse, what, where);
}

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

class RecordChecker {
 public:
  void check(const TokenMatrix& m, const std::string& where) {
    if (dim_ == 0) {
      dim_ = m.dim();
    } else if (m.dim() != dim_) {
      throw parse_error(where + ": record '" + m.id + "' has dimension " +
                        std::to_string(m.dim()) + ", file uses " +
                        std::to_string(dim_));
    }
    if (!ids_.insert(m.id).second) {
      throw parse_error(where + ": duplicate record id '" + m.id + "'");
    }
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_set<std::string> ids_;
};

// Little-endian primitives, independent of host byte order.
template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw parse_error("truncated binary file at byte " +
                            std::to_string(offset_ + static_cast<std::size_t>(in_.gcount())) +
                            " while reading " + what,
                        offset_);
    }
    offset_ += n;
  }

  template <typename T>
  T get_le(const char* what) {
    std::array<unsigned char, sizeof(T)> bytes;
    read(reinterpret_cast<char*>(bytes.data()), bytes.size(), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    return static_cast<T>(v);
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

std::string format_float(float v) {
  // JSON readers take "-0" as the integer 0; keep the sign with a fraction.
  if (v == 0.0f && std::signbit(v)) return "-0.0";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<TokenMatrix> read_jsonl(std::istream& in) {
  std::vector<TokenMatrix> out;
  RecordChecker checker;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw parse_error(where + " byte " + std::to_string(e.byte) +
                            ": malformed JSON",
                        lineno);
    }
    if (!record.is_object() || !record.contains("id") ||
        !record["id"].is_string() || !record.contains("vectors") ||
        !record["vectors"].is_array()) {
      throw parse_error(where + ": expected {\"id\": string, \"vectors\": [[...]]}",
                        lineno);
    }
    std::vector<std::vector<double>> rows;
    for (const auto& row : record["vectors"]) {
      if (!row.is_array()) {
        throw parse_error(where + ": every vector must be an array", lineno);
      }
      auto& dst = rows.emplace_back();
      dst.reserve(row.size());
      for (const auto& v : row) {
        if (!v.is_number()) {
          throw parse_error(where + ": vector components must be numbers", lineno);
        }
        dst.push_back(quantize(v.get<double>()));
      }
    }
    TokenMatrix m;
    try {
      m = TokenMatrix::from_rows(record["id"].get<std::string>(), rows);
    } catch (const Error& e) {
      throw parse_error(where + ": " + e.what(), lineno);
    }
    checker.check(m, where);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<TokenMatrix> read_binary(std::istream& in) {
  ByteReader r(in);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kBinaryMagic, 4) != 0) {
    throw parse_error("byte 0: missing CRSP magic", 0);
  }
  const auto version = r.get_le<std::uint16_t>("version");
  if (version != kBinaryVersion) {
    throw parse_error("byte 4: unsupported format version " + std::to_string(version), 4);
  }
  const auto dim = r.get_le<std::uint32_t>("dimension");
  const auto count = r.get_le<std::uint64_t>("record count");
  if (count > 0 && dim == 0) {
    throw parse_error("byte 6: zero dimension with nonempty records", 6);
  }

  std::vector<TokenMatrix> out;
  RecordChecker checker;
  std::vector<char> buffer;
  for (std::uint64_t rec = 0; rec < count; ++rec) {
    const std::size_t start = r.offset();
    const auto id_len = r.get_le<std::uint16_t>("id length");
    std::string id(id_len, '\0');
    r.read(id.data(), id_len, "id");
    const auto rows = r.get_le<std::uint32_t>("row count");
    if (rows == 0) {
      throw parse_error("byte " + std::to_string(start) + ": record '" + id +
                            "' has no rows",
                        start);
    }
    const std::size_t values = static_cast<std::size_t>(rows) * dim;
    buffer.resize(values * 4);
    r.read(buffer.data(), buffer.size(), "vector data");
    std::vector<double> data(values);
    for (std::size_t i = 0; i < values; ++i) {
      std::uint32_t bits = 0;
      for (std::size_t b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buffer[i * 4 + b]))
                << (8 * b);
      }
      data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    TokenMatrix m{std::move(id), Matrix(rows, dim, std::move(data))};
    const std::string where = "byte " + std::to_string(start);
    try {
      validate(m);
    } catch (const Error& e) {
      throw parse_error(where + ": " + e.what(), start);
    }
    checker.check(m, where);
    out.push_back(std::move(m));
  }
  return out;
}

void write_jsonl(std::ostream& out, std::span<const TokenMatrix> records) {
  for (const auto& m : records) {
    out << "{\"id\":" << json(m.id).dump() << ",\"vectors\":[";
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i) out << ',';
      out << '[';
      const auto row = m.row(i);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        out << format_float(static_cast<float>(row[c]));
      }
      out << ']';
    }
    out << "]}\n";
  }
}

void write_binary(std::ostream& out, std::span<const TokenMatrix> records) {
  const std::size_t dim = records.empty() ? 0 : records.front().dim();
  require_dim(records, dim);
  out.write(kBinaryMagic, 4);
  put_le<std::uint16_t>(out, kBinaryVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  put_le<std::uint64_t>(out, records.size());
  for (const auto& m : records) {
    if (m.id.size() > 0xffff) {
      throw Error(ErrorCode::kIo, "record id longer than 65535 bytes");
    }
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.id.size()));
    out.write(m.id.data(), static_cast<std::streamsize>(m.id.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.size()));
    for (double v : m.values.data()) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
}

std::vector<TokenMatrix> read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  char head[4] = {};
  in.read(head, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(head, kBinaryMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  try {
    return binary ? read_binary(in) : read_jsonl(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.row(), e.subject());
  }
}

EmbeddingFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".bin" || ext == ".crsp" ? EmbeddingFormat::kBinary
                                         : EmbeddingFormat::kJsonl;
}

void write_embeddings(const std::filesystem::path& path,
                      std::span<const TokenMatrix> records) {
  write_embeddings(path, records, format_for_path(path));
}

void write_embeddings(const std::filesystem::path& path,
                      std::span<const TokenMatrix> records,
                      EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  if (format == EmbeddingFormat::kBinary) {
    write_binary(out, records);
  } else {
    write_jsonl(out, records);
  }
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

void write_assignments(std::ostream& out, const std::string& id,
                       std::span<const std::size_t> assignments) {
  for (std::size_t t = 0; t < assignments.size(); ++t) {
    out << id << ' ' << t << ' ' << assignments[t] << '\n';
  }
}

}  // namespace crisp

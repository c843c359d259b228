/*
 * Copyright 2026 The textknn Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "textknn/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

namespace textknn {

static_assert(std::endian::native == std::endian::little,
              "embedding files are read with native float layout");
static_assert(sizeof(float) == 4);

namespace {

template <class T>
T read_le(const unsigned char* p) {
  T v{};
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <class T>
void put_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<float> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) {
    if (!values_.empty()) throw Error("format", "embedding dim is 0 but values were given");
    return;
  }
  if (values_.size() % dim_ != 0) {
    throw Error("format", fmt::format("{} values do not form rows of dim {}", values_.size(), dim_));
  }
  rows_ = values_.size() / dim_;
  for (std::size_t r = 0; r < rows_; ++r) {
    float* row = values_.data() + r * dim_;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) sq += static_cast<double>(row[j]) * row[j];
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error("format", fmt::format("embedding row {} has norm {}; direction undefined", r, norm));
    }
    max_input_deviation_ = std::max(max_input_deviation_, std::abs(norm - 1.0));
    for (std::size_t j = 0; j < dim_; ++j) row[j] = static_cast<float>(row[j] / norm);
  }
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("io", fmt::format("cannot open embedding file '{}'", path.string()));
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  if (file_size < kEmbeddingHeaderBytes) {
    throw Error("format", fmt::format("'{}': {} bytes, shorter than the {}-byte header", path.string(),
                                      file_size, kEmbeddingHeaderBytes));
  }
  unsigned char header[kEmbeddingHeaderBytes];
  in.read(reinterpret_cast<char*>(header), kEmbeddingHeaderBytes);
  if (std::memcmp(header, kEmbeddingMagic, 4) != 0) {
    throw Error("format", fmt::format("'{}': bad magic, expected SEMB", path.string()));
  }
  const auto version = read_le<std::uint32_t>(header + 4);
  if (version != kEmbeddingVersion) {
    throw Error("format", fmt::format("'{}': unsupported version {}", path.string(), version));
  }
  const auto rows = read_le<std::uint64_t>(header + 8);
  const auto dim = read_le<std::uint32_t>(header + 16);
  if (dim == 0 && rows != 0) throw Error("format", fmt::format("'{}': dim is 0", path.string()));
  const std::uint64_t expected = kEmbeddingHeaderBytes + rows * dim * sizeof(float);
  if (file_size != expected) {
    throw Error("format", fmt::format("'{}': header says {} rows x {} dims = {} bytes, file has {} bytes",
                                      path.string(), rows, dim, expected, file_size));
  }
  std::vector<float> values(rows * dim);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!in) throw Error("io", fmt::format("'{}': read failed", path.string()));
  return EmbeddingTable(dim, std::move(values));
}

void write_embeddings(const std::filesystem::path& path, std::size_t dim, std::span<const float> values) {
  if (dim == 0 ? !values.empty() : values.size() % dim != 0) {
    throw Error("invalid_argument", "embedding values do not form whole rows");
  }
  const std::uint64_t rows = dim == 0 ? 0 : values.size() / dim;
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", fmt::format("cannot write '{}'", tmp.string()));
    out.write(kEmbeddingMagic, 4);
    put_le(out, kEmbeddingVersion);
    put_le(out, rows);
    put_le(out, static_cast<std::uint32_t>(dim));
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!out) throw Error("io", fmt::format("write failed for '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

void check_row_count(const EmbeddingTable& table, std::size_t expected_rows) {
  if (table.size() != expected_rows) {
    throw Error("format", fmt::format("embedding table has {} rows but the sentence manifest has {}",
                                      table.size(), expected_rows));
  }
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error("invalid_argument",
                fmt::format("dimension mismatch: {} vs {}", a.size(), b.size()));
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += static_cast<double>(a[j]) * b[j];
  return acc;
}

}  // namespace textknn

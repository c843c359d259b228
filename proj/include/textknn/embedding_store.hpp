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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "textknn/common.hpp"

namespace textknn {

/// Embedding file layout (little-endian):
///   "SEMB" | u32 version = 1 | u64 rows | u32 dim | rows * dim float32, row-major
inline constexpr char kEmbeddingMagic[4] = {'S', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;

/// Sentence embeddings, one unit-norm row per sentence id. Immutable.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// Renormalizes every row. Throws Error("format") on a zero row or when
  /// `values.size()` is not a multiple of `dim`.
  EmbeddingTable(std::size_t dim, std::vector<float> values);

  std::size_t size() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }
  std::span<const float> row(SentenceId s) const { return row(s.value); }
  std::span<const float> values() const noexcept { return values_; }

  /// Largest |norm - 1| among the rows as they were given, before
  /// renormalization.
  double max_input_norm_deviation() const noexcept { return max_input_deviation_; }

 private:
  std::size_t dim_ = 0;
  std::size_t rows_ = 0;
  std::vector<float> values_;
  double max_input_deviation_ = 0.0;
};

EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Writes rows as given (no normalization) through a temp file + rename.
void write_embeddings(const std::filesystem::path& path, std::size_t dim, std::span<const float> values);

/// Throws Error("format") unless the table has exactly `expected_rows` rows.
void check_row_count(const EmbeddingTable& table, std::size_t expected_rows);

/// Dot product accumulated in double, in index order. Throws
/// Error("invalid_argument") on a dimension mismatch.
double cosine_similarity(std::span<const float> a, std::span<const float> b);
inline double cosine_distance(std::span<const float> a, std::span<const float> b) {
  return 1.0 - cosine_similarity(a, b);
}

}  // namespace textknn

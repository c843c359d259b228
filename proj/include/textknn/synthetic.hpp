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

// Seeded synthetic corpora with a planted taste structure.
//
// Users belong to taste clusters. A cluster has an affinity a_{c,i} ~ U[1, 5]
// for every item and users rate round(a_{c,i} + N(0, rating_noise)) clamped
// to [1, 5]. Each review has a few sentences whose embeddings are
// normalize(center_c + item_weight * dir_i + N(0, embedding_noise)), so
// same-cluster sentences about one item are nearest neighbors.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "textknn/corpus.hpp"
#include "textknn/embedding_store.hpp"
#include "textknn/harness.hpp"

namespace textknn {

struct SyntheticOptions {
  std::size_t users = 500;
  std::size_t items = 100;
  std::size_t clusters = 5;
  std::size_t dim = 32;
  std::size_t min_items_per_user = 15;
  std::size_t max_items_per_user = 30;
  std::size_t sentences_per_review = 2;
  double rating_noise = 0.5;
  double item_weight = 0.5;
  double embedding_noise = 0.15;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<Interaction> interactions;
  ChronoSplit split;
  /// Train sentences, ids aligned with `embeddings` rows.
  std::vector<SentenceRecord> sentences;
  EmbeddingTable embeddings;
  /// Cluster of each train user index.
  std::vector<std::size_t> user_cluster;
};

SyntheticCorpus make_synthetic(const SyntheticOptions& options);

/// Workspace inputs holding the synthetic split, sentences and embeddings.
Inputs synthetic_inputs(const SyntheticCorpus& corpus);

/// Writes reviews.tsv (generic-tsv, all interactions), train/validation/test
/// JSONL, sentences.tsv and embeddings.semb into `dir`.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace textknn

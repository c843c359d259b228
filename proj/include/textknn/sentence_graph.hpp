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

// Directed k-NN graphs over sentence embeddings, edge weighting, and match
// heatmaps.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "textknn/common.hpp"
#include "textknn/corpus.hpp"
#include "textknn/embedding_store.hpp"

namespace textknn {

enum class GraphScope { global, per_item };

GraphScope parse_graph_scope(std::string_view name);
std::string_view to_string(GraphScope scope);

struct Edge {
  SentenceId tail;
  double cosine = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Exact k-NN graph. Vertices are sorted by id; a head's out-edges are sorted
/// by descending cosine, ties by ascending tail id.
class SentenceGraph {
 public:
  SentenceGraph() = default;
  SentenceGraph(std::optional<ItemIdx> item, std::size_t k, std::vector<SentenceId> vertices,
                std::vector<std::size_t> offsets, std::vector<Edge> edges);

  /// Item the graph was built for; nullopt for the global graph.
  std::optional<ItemIdx> item() const noexcept { return item_; }
  std::size_t k() const noexcept { return k_; }
  std::span<const SentenceId> vertices() const noexcept { return vertices_; }
  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const Edge> out_edges(std::size_t local) const {
    return {edges_.data() + offsets_.at(local), offsets_.at(local + 1) - offsets_.at(local)};
  }
  std::optional<std::size_t> local_index(SentenceId s) const;

  friend bool operator==(const SentenceGraph&, const SentenceGraph&) = default;

 private:
  std::optional<ItemIdx> item_;
  std::size_t k_ = 0;
  std::vector<SentenceId> vertices_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Edge> edges_;
};

struct KnnGraphOptions {
  std::size_t k = 10;
  /// Drops edges whose cosine is below the threshold. Off by default.
  std::optional<double> min_similarity;
  std::size_t threads = 1;
};

/// Brute-force exact k-NN over `vertices` (self excluded). Throws
/// Error("invalid_argument") if k == 0 or a vertex has no embedding row.
SentenceGraph build_knn_graph(const EmbeddingTable& table, std::vector<SentenceId> vertices,
                              const KnnGraphOptions& options, std::optional<ItemIdx> item = {});

/// One graph over every sentence for global scope, or one graph per item
/// with sentences (ascending item index) for per-item scope.
std::vector<SentenceGraph> build_graphs(const EmbeddingTable& table, const SentenceCorpus& corpus,
                                        GraphScope scope, const KnnGraphOptions& options);

enum class WeightScheme { binary, continuous };

WeightScheme parse_weight_scheme(std::string_view name);
std::string_view to_string(WeightScheme scheme);

struct EdgeWeightConfig {
  WeightScheme scheme = WeightScheme::binary;
  bool polarized = false;

  friend bool operator==(const EdgeWeightConfig&, const EdgeWeightConfig&) = default;
};

/// Rating-derived sentiment: +1 for ratings >= 4, -1 for <= 2, else 0.
int sentiment(double review_rating);

/// +1 when the sentiments of the two reviews differ by at most 1, else -1.
int polarization(double head_rating, double tail_rating);

/// Weight of a graph edge: 1 (binary) or (1 + cos) / 2 (continuous), times
/// the polarization sign when enabled. Non-edges weigh 0 by convention.
double edge_weight(double head_rating, double tail_rating, double raw_cos, const EdgeWeightConfig& cfg);
double edge_weight(const SentenceRecord& head, const SentenceRecord& tail, double raw_cos,
                   const EdgeWeightConfig& cfg);

/// Sums of |weight| over incident edges, indexed by local vertex position.
struct WeightedDegrees {
  std::vector<double> in;
  std::vector<double> out;
};

WeightedDegrees weighted_degrees(const SentenceGraph& g, const SentenceCorpus& corpus,
                                 const EdgeWeightConfig& cfg);

/// Match counts between sentence groups (rows: heads, columns: tails) with
/// the sqrt(row weight * column weight) normalization.
struct MatchHeatmap {
  std::vector<std::string> labels;
  std::vector<double> counts;      // row-major labels.size()^2
  std::vector<double> normalized;  // same shape

  std::size_t size() const noexcept { return labels.size(); }
  double count(std::size_t a, std::size_t b) const { return counts.at(a * size() + b); }
  double value(std::size_t a, std::size_t b) const { return normalized.at(a * size() + b); }
};

inline constexpr std::size_t kNoGroup = static_cast<std::size_t>(-1);

/// `group_of` maps every sentence id of the corpus to a group index in
/// [0, labels.size()) or kNoGroup. Edges touching an ungrouped sentence are
/// left out, which restricts the heatmap to the induced sub-graph.
MatchHeatmap aggregate_match_heatmap(const SentenceGraph& g, const SentenceCorpus& corpus,
                                     std::span<const std::size_t> group_of,
                                     std::vector<std::string> labels, bool drop_same_item);

/// TSV rows: head_id, tail_id, raw_cos.
void write_graph_tsv(const std::filesystem::path& path, std::span<const SentenceGraph> graphs);
void write_heatmap_csv(const std::filesystem::path& path, const MatchHeatmap& heatmap);

}  // namespace textknn

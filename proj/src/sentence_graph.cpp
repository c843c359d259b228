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

#include "textknn/sentence_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "textknn/parallel.hpp"

namespace textknn {
namespace {

constexpr std::size_t kHeadBlock = 32;
constexpr std::size_t kTailBlock = 256;

// Same accumulation order as cosine_similarity().
inline double dot(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) acc += static_cast<double>(a[j]) * b[j];
  return acc;
}

// Strict total order: higher cosine first, then lower tail id.
inline bool ranks_before(const Edge& a, const Edge& b) {
  return a.cosine > b.cosine || (a.cosine == b.cosine && a.tail < b.tail);
}

// Bounded top-`cap` selection. The heap front is the weakest kept edge.
class TopK {
 public:
  explicit TopK(std::size_t cap) : cap_(cap) { heap_.reserve(cap); }

  void offer(const Edge& e) {
    if (cap_ == 0) return;
    if (heap_.size() < cap_) {
      heap_.push_back(e);
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    } else if (ranks_before(e, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
      heap_.back() = e;
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    }
  }

  std::vector<Edge> sorted() && {
    std::sort(heap_.begin(), heap_.end(), ranks_before);
    return std::move(heap_);
  }

 private:
  std::size_t cap_;
  std::vector<Edge> heap_;
};

}  // namespace

GraphScope parse_graph_scope(std::string_view name) {
  if (name == "global") return GraphScope::global;
  if (name == "per_item") return GraphScope::per_item;
  throw Error("config", fmt::format("unknown graph scope '{}'", name));
}

std::string_view to_string(GraphScope scope) {
  return scope == GraphScope::global ? "global" : "per_item";
}

WeightScheme parse_weight_scheme(std::string_view name) {
  if (name == "binary") return WeightScheme::binary;
  if (name == "continuous") return WeightScheme::continuous;
  throw Error("config", fmt::format("unknown edge weight scheme '{}'", name));
}

std::string_view to_string(WeightScheme scheme) {
  return scheme == WeightScheme::binary ? "binary" : "continuous";
}

SentenceGraph::SentenceGraph(std::optional<ItemIdx> item, std::size_t k, std::vector<SentenceId> vertices,
                             std::vector<std::size_t> offsets, std::vector<Edge> edges)
    : item_(item), k_(k), vertices_(std::move(vertices)), offsets_(std::move(offsets)),
      edges_(std::move(edges)) {
  if (offsets_.size() != vertices_.size() + 1 || offsets_.back() != edges_.size()) {
    throw Error("invalid_argument", "graph offsets do not match vertices/edges");
  }
}

std::optional<std::size_t> SentenceGraph::local_index(SentenceId s) const {
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), s);
  if (it == vertices_.end() || *it != s) return std::nullopt;
  return static_cast<std::size_t>(it - vertices_.begin());
}

SentenceGraph build_knn_graph(const EmbeddingTable& table, std::vector<SentenceId> vertices,
                              const KnnGraphOptions& options, std::optional<ItemIdx> item) {
  if (options.k == 0) throw Error("invalid_argument", "k must be at least 1");
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  for (auto s : vertices) {
    if (s.value >= table.size()) {
      throw Error("invalid_argument",
                  fmt::format("sentence {} has no embedding row ({} rows)", s.value, table.size()));
    }
  }
  const std::size_t n = vertices.size();
  const std::size_t dim = table.dim();
  const std::size_t degree = n == 0 ? 0 : std::min(options.k, n - 1);

  // Local copy so tail blocks are contiguous.
  std::vector<float> local(n * dim);
  for (std::size_t v = 0; v < n; ++v) {
    auto row = table.row(vertices[v]);
    std::copy(row.begin(), row.end(), local.begin() + static_cast<std::ptrdiff_t>(v * dim));
  }

  std::vector<std::vector<Edge>> lists(n);
  const std::size_t blocks = (n + kHeadBlock - 1) / kHeadBlock;
  parallel_for(blocks, options.threads, [&](std::size_t block) {
    const std::size_t h0 = block * kHeadBlock, h1 = std::min(n, h0 + kHeadBlock);
    std::vector<TopK> tops(h1 - h0, TopK(degree));
    for (std::size_t t0 = 0; t0 < n; t0 += kTailBlock) {
      const std::size_t t1 = std::min(n, t0 + kTailBlock);
      for (std::size_t h = h0; h < h1; ++h) {
        const float* head = local.data() + h * dim;
        auto& top = tops[h - h0];
        for (std::size_t t = t0; t < t1; ++t) {
          if (t == h) continue;
          top.offer(Edge{vertices[t], dot(head, local.data() + t * dim, dim)});
        }
      }
    }
    for (std::size_t h = h0; h < h1; ++h) {
      auto edges = std::move(tops[h - h0]).sorted();
      if (options.min_similarity) {
        const double floor = *options.min_similarity;
        std::erase_if(edges, [floor](const Edge& e) { return e.cosine < floor; });
      }
      lists[h] = std::move(edges);
    }
  });

  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t h = 0; h < n; ++h) offsets[h + 1] = offsets[h] + lists[h].size();
  std::vector<Edge> edges;
  edges.reserve(offsets.back());
  for (auto& l : lists) edges.insert(edges.end(), l.begin(), l.end());
  return SentenceGraph(item, options.k, std::move(vertices), std::move(offsets), std::move(edges));
}

std::vector<SentenceGraph> build_graphs(const EmbeddingTable& table, const SentenceCorpus& corpus,
                                        GraphScope scope, const KnnGraphOptions& options) {
  check_row_count(table, corpus.size());
  std::vector<SentenceGraph> graphs;
  if (scope == GraphScope::global) {
    std::vector<SentenceId> all(corpus.size());
    for (std::size_t s = 0; s < all.size(); ++s) all[s] = SentenceId{s};
    graphs.push_back(build_knn_graph(table, std::move(all), options));
    return graphs;
  }
  std::vector<ItemIdx> items;
  for (std::size_t i = 0; i < corpus.num_items(); ++i) {
    if (!corpus.by_item(ItemIdx{i}).empty()) items.emplace_back(i);
  }
  graphs.resize(items.size());
  KnnGraphOptions inner = options;
  inner.threads = 1;
  parallel_for(items.size(), options.threads, [&](std::size_t g) {
    auto members = corpus.by_item(items[g]);
    graphs[g] = build_knn_graph(table, {members.begin(), members.end()}, inner, items[g]);
  });
  return graphs;
}

int sentiment(double review_rating) {
  if (review_rating >= 4.0) return 1;
  if (review_rating <= 2.0) return -1;
  return 0;
}

int polarization(double head_rating, double tail_rating) {
  return std::abs(sentiment(head_rating) - sentiment(tail_rating)) <= 1 ? 1 : -1;
}

double edge_weight(double head_rating, double tail_rating, double raw_cos, const EdgeWeightConfig& cfg) {
  double w = cfg.scheme == WeightScheme::binary ? 1.0 : (1.0 + raw_cos) / 2.0;
  if (cfg.polarized) w *= polarization(head_rating, tail_rating);
  return w;
}

double edge_weight(const SentenceRecord& head, const SentenceRecord& tail, double raw_cos,
                   const EdgeWeightConfig& cfg) {
  return edge_weight(head.review_rating, tail.review_rating, raw_cos, cfg);
}

WeightedDegrees weighted_degrees(const SentenceGraph& g, const SentenceCorpus& corpus,
                                 const EdgeWeightConfig& cfg) {
  WeightedDegrees d;
  d.in.assign(g.num_vertices(), 0.0);
  d.out.assign(g.num_vertices(), 0.0);
  const auto vertices = g.vertices();
  for (std::size_t h = 0; h < g.num_vertices(); ++h) {
    const double head_rating = corpus.rating_of(vertices[h]);
    for (const auto& e : g.out_edges(h)) {
      const double w = std::abs(edge_weight(head_rating, corpus.rating_of(e.tail), e.cosine, cfg));
      d.out[h] += w;
      d.in[*g.local_index(e.tail)] += w;
    }
  }
  return d;
}

MatchHeatmap aggregate_match_heatmap(const SentenceGraph& g, const SentenceCorpus& corpus,
                                     std::span<const std::size_t> group_of,
                                     std::vector<std::string> labels, bool drop_same_item) {
  if (group_of.size() != corpus.size()) {
    throw Error("invalid_argument", "group assignment must cover every sentence");
  }
  const std::size_t m = labels.size();
  MatchHeatmap map{std::move(labels), std::vector<double>(m * m, 0.0), std::vector<double>(m * m, 0.0)};
  const auto vertices = g.vertices();
  for (std::size_t h = 0; h < g.num_vertices(); ++h) {
    const std::size_t a = group_of[vertices[h].value];
    if (a == kNoGroup) continue;
    for (const auto& e : g.out_edges(h)) {
      const std::size_t b = group_of[e.tail.value];
      if (b == kNoGroup) continue;
      if (drop_same_item && corpus.item_of(vertices[h]) == corpus.item_of(e.tail)) continue;
      if (a >= m || b >= m) throw Error("invalid_argument", "group index out of range");
      map.counts[a * m + b] += 1.0;
    }
  }
  std::vector<double> row_sum(m, 0.0), col_sum(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      row_sum[a] += map.counts[a * m + b];
      col_sum[b] += map.counts[a * m + b];
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const double denom = row_sum[a] * col_sum[b];
      map.normalized[a * m + b] = denom > 0.0 ? map.counts[a * m + b] / std::sqrt(denom) : 0.0;
    }
  }
  return map;
}

void write_graph_tsv(const std::filesystem::path& path, std::span<const SentenceGraph> graphs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  for (const auto& g : graphs) {
    const auto vertices = g.vertices();
    for (std::size_t h = 0; h < g.num_vertices(); ++h) {
      for (const auto& e : g.out_edges(h)) {
        out << fmt::format("{}\t{}\t{}\n", vertices[h].value, e.tail.value, e.cosine);
      }
    }
  }
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

void write_heatmap_csv(const std::filesystem::path& path, const MatchHeatmap& heatmap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  out << "head";
  for (const auto& l : heatmap.labels) out << ',' << l;
  out << '\n';
  for (std::size_t a = 0; a < heatmap.size(); ++a) {
    out << heatmap.labels[a];
    for (std::size_t b = 0; b < heatmap.size(); ++b) out << fmt::format(",{:.6f}", heatmap.value(a, b));
    out << '\n';
  }
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

}  // namespace textknn

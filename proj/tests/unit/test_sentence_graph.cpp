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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "textknn/sentence_graph.hpp"

namespace textknn {
namespace {

using testing::make_dataset;

std::vector<SentenceId> iota_ids(std::size_t n) {
  std::vector<SentenceId> ids(n);
  for (std::size_t s = 0; s < n; ++s) ids[s] = SentenceId{s};
  return ids;
}

std::vector<Edge> edges_of(const SentenceGraph& g, std::size_t local) {
  auto e = g.out_edges(local);
  return {e.begin(), e.end()};
}

EmbeddingTable angles(std::initializer_list<double> degrees) {
  std::vector<float> v;
  for (double d : degrees) {
    v.push_back(static_cast<float>(std::cos(d * std::numbers::pi / 180)));
    v.push_back(static_cast<float>(std::sin(d * std::numbers::pi / 180)));
  }
  return EmbeddingTable(2, std::move(v));
}

TEST(KnnGraph, ThreeAnglesK1) {
  auto t = angles({0, 10, 90});
  auto g = build_knn_graph(t, iota_ids(3), {.k = 1});
  ASSERT_EQ(g.num_edges(), 3u);
  EXPECT_EQ(g.out_edges(0)[0].tail, SentenceId{1});
  EXPECT_EQ(g.out_edges(1)[0].tail, SentenceId{0});
  EXPECT_EQ(g.out_edges(2)[0].tail, SentenceId{1});
  EXPECT_NEAR(g.out_edges(0)[0].cosine, std::cos(10 * std::numbers::pi / 180), 1e-6);
}

TEST(KnnGraph, DegreeClippedToVerticesMinusOne) {
  auto t = angles({0, 10, 90});
  auto g = build_knn_graph(t, iota_ids(3), {.k = 10});
  for (std::size_t h = 0; h < 3; ++h) EXPECT_EQ(g.out_edges(h).size(), 2u);
}

TEST(KnnGraph, TieKeepsSmallerIdWhenCapacityBinds) {
  // 1 and 2 are both at 45 degrees from 0.
  auto t = angles({0, 45, -45});
  auto g = build_knn_graph(t, {SentenceId{2}, SentenceId{0}, SentenceId{1}}, {.k = 1});
  ASSERT_EQ(g.vertices()[0], SentenceId{0});
  EXPECT_EQ(g.out_edges(0)[0].tail, SentenceId{1});
  auto g2 = build_knn_graph(t, iota_ids(3), {.k = 2});
  EXPECT_EQ(g2.out_edges(0)[0].tail, SentenceId{1});
  EXPECT_EQ(g2.out_edges(0)[1].tail, SentenceId{2});
}

TEST(KnnGraph, DegenerateScopes) {
  auto t = angles({0, 10});
  auto one = build_knn_graph(t, {SentenceId{1}}, {.k = 3});
  EXPECT_EQ(one.num_vertices(), 1u);
  EXPECT_EQ(one.num_edges(), 0u);
  auto none = build_knn_graph(t, {}, {.k = 3});
  EXPECT_EQ(none.num_vertices(), 0u);
  EXPECT_EQ(none.num_edges(), 0u);
}

TEST(KnnGraph, Errors) {
  auto t = angles({0, 10});
  EXPECT_THROW(build_knn_graph(t, iota_ids(2), {.k = 0}), Error);
  EXPECT_THROW(build_knn_graph(t, iota_ids(3), {.k = 1}), Error);
}

TEST(KnnGraph, MatchesBruteForceIncludingTies) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::size_t> rows(2, 200), dims(1, 16);
    auto t = testing::random_table(rng, rows(rng), dims(rng), 0.15);
    for (std::size_t k : {1, 5, 10}) {
      auto g = build_knn_graph(t, iota_ids(t.size()), {.k = k, .threads = 2});
      auto want = testing::brute_knn(t, iota_ids(t.size()), k);
      for (std::size_t h = 0; h < t.size(); ++h) ASSERT_EQ(edges_of(g, h), want[h]) << trial << " head " << h;
    }
  }
}

TEST(KnnGraph, ThresholdDropsLowCosines) {
  std::mt19937_64 rng(5);
  auto t = testing::random_table(rng, 60, 4);
  auto g = build_knn_graph(t, iota_ids(60), {.k = 8, .min_similarity = 0.3});
  auto want = testing::brute_knn(t, iota_ids(60), 8, 0.3);
  for (std::size_t h = 0; h < 60; ++h) EXPECT_EQ(edges_of(g, h), want[h]);
}

TEST(KnnGraph, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(9);
  auto t = testing::random_table(rng, 150, 8, 0.1);
  auto a = build_knn_graph(t, iota_ids(150), {.k = 10, .threads = 1});
  auto b = build_knn_graph(t, iota_ids(150), {.k = 10, .threads = 3});
  EXPECT_EQ(a, b);
}

TEST(BuildGraphs, PerItemScopeBuildsOneGraphPerItem) {
  auto d = make_dataset({{"u", "a", 5, 1}, {"v", "a", 4, 2}, {"u", "b", 3, 3}, {"w", "c", 2, 4}});
  std::vector<SentenceRecord> s = {{SentenceId{0}, "u", "a", 5, "x", 0}, {SentenceId{1}, "v", "a", 4, "y", 0},
                                   {SentenceId{2}, "u", "a", 5, "z", 1}, {SentenceId{3}, "w", "c", 2, "q", 0}};
  SentenceCorpus corpus(d, s);
  auto t = angles({0, 20, 40, 60});
  auto graphs = build_graphs(t, corpus, GraphScope::per_item, {.k = 5});
  ASSERT_EQ(graphs.size(), 2u);  // item b has no sentences
  EXPECT_EQ(graphs[0].item(), d.find_item("a"));
  EXPECT_EQ(graphs[0].num_vertices(), 3u);
  EXPECT_EQ(graphs[0].num_edges(), 6u);
  EXPECT_EQ(graphs[1].item(), d.find_item("c"));
  EXPECT_EQ(graphs[1].num_edges(), 0u);
  for (const auto& g : graphs)
    for (std::size_t h = 0; h < g.num_vertices(); ++h)
      for (const auto& e : g.out_edges(h)) EXPECT_EQ(corpus.item_of(e.tail), g.item());
  auto global = build_graphs(t, corpus, GraphScope::global, {.k = 5});
  ASSERT_EQ(global.size(), 1u);
  EXPECT_FALSE(global[0].item().has_value());
  EXPECT_EQ(global[0].num_edges(), 12u);
  EXPECT_THROW(build_graphs(angles({0}), corpus, GraphScope::global, {.k = 1}), Error);
}

TEST(GraphScopeNames, RoundTrip) {
  EXPECT_EQ(parse_graph_scope(to_string(GraphScope::per_item)), GraphScope::per_item);
  EXPECT_EQ(parse_graph_scope("global"), GraphScope::global);
  EXPECT_THROW(parse_graph_scope("local"), Error);
  EXPECT_EQ(parse_weight_scheme(to_string(WeightScheme::continuous)), WeightScheme::continuous);
  EXPECT_THROW(parse_weight_scheme("fuzzy"), Error);
}

// ---------------------------------------------------------------------------

TEST(EdgeWeight, Examples) {
  const EdgeWeightConfig cont{WeightScheme::continuous, false};
  const EdgeWeightConfig pol{WeightScheme::continuous, true};
  EXPECT_EQ(edge_weight(4, 4, 1.0, cont), 1.0);
  EXPECT_EQ(edge_weight(4, 4, -1.0, cont), 0.0);
  EXPECT_EQ(edge_weight(5, 1, 0.5, pol), -0.75);
  EXPECT_EQ(edge_weight(5, 3, 0.5, pol), 0.75);
  EXPECT_EQ(edge_weight(1, 5, 0.2, EdgeWeightConfig{WeightScheme::binary, false}), 1.0);
  EXPECT_EQ(edge_weight(1, 5, 0.2, EdgeWeightConfig{WeightScheme::binary, true}), -1.0);
}

TEST(EdgeWeight, RangesPerScheme) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> cosine(-1, 1);
  std::uniform_int_distribution<int> stars(1, 5);
  for (int n = 0; n < 1000; ++n) {
    const double c = cosine(rng), a = stars(rng), b = stars(rng);
    const double bin = edge_weight(a, b, c, {WeightScheme::binary, false});
    EXPECT_EQ(bin, 1.0);
    const double cont = edge_weight(a, b, c, {WeightScheme::continuous, false});
    EXPECT_GE(cont, 0.0);
    EXPECT_LE(cont, 1.0);
    const double pol = edge_weight(a, b, c, {WeightScheme::continuous, true});
    EXPECT_GE(pol, -1.0);
    EXPECT_LE(pol, 1.0);
    EXPECT_EQ(std::abs(pol), cont);
  }
}

TEST(Sentiment, Thresholds) {
  EXPECT_EQ(sentiment(4.0), 1);
  EXPECT_EQ(sentiment(5.0), 1);
  EXPECT_EQ(sentiment(2.0), -1);
  EXPECT_EQ(sentiment(1.0), -1);
  EXPECT_EQ(sentiment(3.0), 0);
  EXPECT_EQ(polarization(5, 3), 1);
  EXPECT_EQ(polarization(3, 1), 1);
  EXPECT_EQ(polarization(5, 1), -1);
  EXPECT_EQ(polarization(2, 4), -1);
}

// Corpus where every sentence comes from its own review of item "a" by user
// u<s>, with the given ratings.
struct SmallCorpus {
  Dataset train;
  SentenceCorpus corpus;
};
SmallCorpus one_sentence_each(const std::vector<double>& ratings, bool distinct_items = false) {
  std::vector<testing::Rating> rows;
  std::vector<SentenceRecord> s;
  for (std::size_t k = 0; k < ratings.size(); ++k) {
    const auto u = "u" + std::to_string(k);
    const auto i = distinct_items ? "i" + std::to_string(k % 2) : std::string("a");
    rows.push_back({u, i, ratings[k], static_cast<std::int64_t>(k)});
    s.push_back({SentenceId{k}, u, i, ratings[k], "s", 0});
  }
  SmallCorpus out{make_dataset(rows), {}};
  out.corpus = SentenceCorpus(out.train, s);
  return out;
}

TEST(WeightedDegrees, BinaryAndIsolated) {
  auto c = one_sentence_each(std::vector<double>(12, 4.0));
  std::mt19937_64 rng(1);
  auto t = testing::random_table(rng, 12, 3);
  auto g = build_knn_graph(t, iota_ids(12), {.k = 10});
  auto d = weighted_degrees(g, c.corpus, {WeightScheme::binary, false});
  for (std::size_t h = 0; h < 12; ++h) EXPECT_EQ(d.out[h], 10.0);
  // Vertex 2 has no in-edges.
  SentenceGraph star(std::nullopt, 1, iota_ids(3), {0, 1, 2, 3},
                     {{SentenceId{1}, 0.2}, {SentenceId{0}, 0.2}, {SentenceId{0}, 0.6}});
  auto c3 = one_sentence_each({5, 1, 3});
  auto d3 = weighted_degrees(star, c3.corpus, {WeightScheme::binary, false});
  EXPECT_EQ(d3.in[2], 0.0);
  EXPECT_EQ(d3.in[0], 2.0);
}

TEST(WeightedDegrees, ContinuousHandSums) {
  SentenceGraph g(std::nullopt, 2, iota_ids(3), {0, 2, 3, 4},
                  {{SentenceId{1}, 0.6}, {SentenceId{2}, 0.2}, {SentenceId{0}, 0.6}, {SentenceId{1}, -0.4}});
  auto c = one_sentence_each({5, 1, 3});
  auto d = weighted_degrees(g, c.corpus, {WeightScheme::continuous, true});
  // |weights|: 0->1 0.8, 0->2 0.6, 1->0 0.8, 2->1 0.3
  EXPECT_NEAR(d.out[0], 1.4, 1e-12);
  EXPECT_NEAR(d.out[1], 0.8, 1e-12);
  EXPECT_NEAR(d.out[2], 0.3, 1e-12);
  EXPECT_NEAR(d.in[0], 0.8, 1e-12);
  EXPECT_NEAR(d.in[1], 1.1, 1e-12);
  EXPECT_NEAR(d.in[2], 0.6, 1e-12);
}

// ---------------------------------------------------------------------------

SentenceGraph manual_graph(std::size_t n, const std::vector<std::vector<std::size_t>>& tails) {
  std::vector<std::size_t> offsets{0};
  std::vector<Edge> edges;
  for (const auto& row : tails) {
    for (auto t : row) edges.push_back({SentenceId{t}, 0.5});
    offsets.push_back(edges.size());
  }
  return SentenceGraph(std::nullopt, 5, iota_ids(n), offsets, edges);
}

TEST(Heatmap, SingleGroup) {
  auto c = one_sentence_each({4, 4, 4});
  auto g = manual_graph(3, {{1, 2}, {0}, {1}});
  std::vector<std::size_t> groups(3, 0);
  auto h = aggregate_match_heatmap(g, c.corpus, groups, {"all"}, false);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h.count(0, 0), 4.0);
  EXPECT_EQ(h.value(0, 0), 1.0);
}

TEST(Heatmap, TwoGroupsFixture) {
  auto c = one_sentence_each(std::vector<double>(10, 4.0));
  auto g = manual_graph(10, {{1, 2, 3, 4, 5}, {}, {}, {}, {}, {0, 6, 7, 8, 9}, {}, {}, {}, {}});
  std::vector<std::size_t> groups = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  auto h = aggregate_match_heatmap(g, c.corpus, groups, {"A", "B"}, false);
  EXPECT_EQ(h.count(0, 0), 4.0);
  EXPECT_EQ(h.count(0, 1), 1.0);
  EXPECT_NEAR(h.value(0, 0), 0.8, 1e-12);
  EXPECT_NEAR(h.value(0, 1), 0.2, 1e-12);
  EXPECT_NEAR(h.value(1, 0), 0.2, 1e-12);
  EXPECT_NEAR(h.value(1, 1), 0.8, 1e-12);
}

TEST(Heatmap, NoCrossEdgesGivesZeroOffDiagonal) {
  auto c = one_sentence_each(std::vector<double>(4, 4.0));
  auto g = manual_graph(4, {{1}, {0}, {3}, {2}});
  std::vector<std::size_t> groups = {0, 0, 1, 1};
  auto h = aggregate_match_heatmap(g, c.corpus, groups, {"A", "B"}, false);
  EXPECT_EQ(h.value(0, 1), 0.0);
  EXPECT_EQ(h.value(1, 0), 0.0);
  EXPECT_EQ(h.value(0, 0), 1.0);
}

TEST(Heatmap, DropSameItemAndUngrouped) {
  auto c = one_sentence_each({4, 4, 4, 4}, /*distinct_items=*/true);  // items i0, i1, i0, i1
  auto g = manual_graph(4, {{1, 2}, {3}, {0, 3}, {0}});
  std::vector<std::size_t> groups = {0, 0, 0, kNoGroup};
  auto all = aggregate_match_heatmap(g, c.corpus, groups, {"A"}, false);
  EXPECT_EQ(all.count(0, 0), 3.0);  // edges touching sentence 3 are left out
  auto cross = aggregate_match_heatmap(g, c.corpus, groups, {"A"}, true);
  EXPECT_EQ(cross.count(0, 0), 1.0);  // only 0->1 crosses items
  EXPECT_THROW(aggregate_match_heatmap(g, c.corpus, std::vector<std::size_t>(3, 0), {"A"}, false), Error);
}

TEST(GraphFiles, TsvAndCsvAreWritten) {
  testing::TempDir dir;
  auto g = manual_graph(2, {{1}, {0}});
  write_graph_tsv(dir / "g.tsv", std::vector<SentenceGraph>{g});
  EXPECT_EQ(testing::read_file(dir / "g.tsv"), "0\t1\t0.5\n1\t0\t0.5\n");
  auto c = one_sentence_each({4, 4});
  auto h = aggregate_match_heatmap(g, c.corpus, std::vector<std::size_t>{0, 1}, {"A", "B"}, false);
  write_heatmap_csv(dir / "h.csv", h);
  EXPECT_FALSE(testing::read_file(dir / "h.csv").empty());
}

}  // namespace
}  // namespace textknn

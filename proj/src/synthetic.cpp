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

#include "textknn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

#include <fmt/format.h>

namespace textknn {
namespace {

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  for (auto& x : v) {
    x = g(rng);
    sq += x * x;
  }
  const double n = std::sqrt(sq);
  for (auto& x : v) x /= n;
  return v;
}

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticOptions& o) {
  if (o.users == 0 || o.items == 0 || o.clusters == 0 || o.dim == 0) {
    throw Error("invalid_argument", "synthetic corpus sizes must be positive");
  }
  if (o.min_items_per_user > o.max_items_per_user || o.max_items_per_user > o.items) {
    throw Error("invalid_argument", "items per user must satisfy min <= max <= items");
  }
  std::mt19937_64 rng(o.seed);
  std::vector<std::vector<double>> centers;
  for (std::size_t c = 0; c < o.clusters; ++c) centers.push_back(random_unit(rng, o.dim));
  std::vector<std::vector<double>> item_dirs;
  for (std::size_t i = 0; i < o.items; ++i) item_dirs.push_back(random_unit(rng, o.dim));
  std::uniform_real_distribution<double> affinity_dist(kMinRating, kMaxRating);
  std::vector<std::vector<double>> affinity(o.clusters, std::vector<double>(o.items));
  for (auto& row : affinity)
    for (auto& a : row) a = affinity_dist(rng);

  const auto user_name = [&](std::size_t u) { return fmt::format("u{:04}", u); };
  const auto item_name = [&](std::size_t i) { return fmt::format("i{:03}", i); };

  SyntheticCorpus out;
  std::unordered_map<std::string, std::size_t> cluster_of;
  std::uniform_int_distribution<std::size_t> cluster_dist(0, o.clusters - 1);
  std::uniform_int_distribution<std::size_t> count_dist(o.min_items_per_user, o.max_items_per_user);
  std::normal_distribution<double> rating_noise(0.0, o.rating_noise);
  std::vector<std::size_t> items(o.items);
  for (std::size_t u = 0; u < o.users; ++u) {
    const std::size_t c = cluster_dist(rng);
    cluster_of[user_name(u)] = c;
    std::iota(items.begin(), items.end(), 0);
    std::shuffle(items.begin(), items.end(), rng);
    const std::size_t n = count_dist(rng);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = items[k];
      const double r = clamp_rating(std::round(affinity[c][i] + rating_noise(rng)));
      std::string text;
      for (std::size_t j = 0; j < o.sentences_per_review; ++j) {
        if (j) text += ' ';
        text += fmt::format("Review note {} from {} about {}.", j, user_name(u), item_name(i));
      }
      const auto ts = static_cast<std::int64_t>(1'500'000'000 + k * 86'400 + u);
      out.interactions.push_back({user_name(u), item_name(i), r, ts, std::move(text)});
    }
  }

  out.split = chrono_split(Dataset(out.interactions));
  out.sentences = segment_sentences(out.split.train);
  const auto& train = out.split.train;
  out.user_cluster.resize(train.num_users());
  for (std::size_t u = 0; u < train.num_users(); ++u) out.user_cluster[u] = cluster_of.at(train.user_id(UserIdx{u}));

  std::normal_distribution<double> noise(0.0, o.embedding_noise);
  std::vector<float> values;
  values.reserve(out.sentences.size() * o.dim);
  for (const auto& s : out.sentences) {
    const auto& center = centers[cluster_of.at(s.user_id)];
    const auto& dir = item_dirs[std::stoul(s.item_id.substr(1))];
    std::vector<double> v(o.dim);
    double sq = 0.0;
    for (std::size_t d = 0; d < o.dim; ++d) {
      v[d] = center[d] + o.item_weight * dir[d] + noise(rng);
      sq += v[d] * v[d];
    }
    const double norm = std::sqrt(sq);
    for (std::size_t d = 0; d < o.dim; ++d) values.push_back(static_cast<float>(v[d] / norm));
  }
  out.embeddings = EmbeddingTable(o.dim, std::move(values));
  return out;
}

Inputs synthetic_inputs(const SyntheticCorpus& corpus) {
  Inputs in;
  in.train = corpus.split.train;
  in.validation = corpus.split.validation;
  in.test = corpus.split.test;
  in.sentences = corpus.sentences;
  in.embeddings = corpus.embeddings;
  return in;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "reviews.tsv", std::ios::binary);
    if (!out) throw Error("io", fmt::format("cannot write into '{}'", dir.string()));
    for (const auto& x : corpus.interactions) {
      out << fmt::format("{}\t{}\t{}\t{}\t{}\n", x.user_id, x.item_id, x.rating, x.timestamp, x.text);
    }
  }
  write_interactions_jsonl(dir / "train.jsonl", corpus.split.train.interactions());
  write_interactions_jsonl(dir / "validation.jsonl", corpus.split.validation);
  write_interactions_jsonl(dir / "test.jsonl", corpus.split.test);
  write_sentence_manifest(dir / "sentences.tsv", corpus.sentences);
  write_embeddings(dir / "embeddings.semb", corpus.embeddings.dim(), corpus.embeddings.values());
}

}  // namespace textknn

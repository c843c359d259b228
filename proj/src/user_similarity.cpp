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

#include "textknn/user_similarity.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "textknn/parallel.hpp"

namespace textknn {
namespace {

using Entry = UserWeightMatrix::Entry;

bool contains(const std::vector<UserIdx>& sorted, UserIdx v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

// Stable-sorts by user and sums duplicates in their original order.
std::vector<Entry> merge_entries(std::vector<Entry> entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.user < b.user; });
  std::vector<Entry> merged;
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().user == e.user) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

void check_scope(std::span<const SentenceGraph> graphs, GraphScope scope) {
  for (const auto& g : graphs) {
    if (g.item().has_value() != (scope == GraphScope::per_item)) {
      throw Error("config", fmt::format("graphs were not built for {} scope", to_string(scope)));
    }
  }
  if (scope == GraphScope::global && graphs.size() > 1) {
    throw Error("config", "global scope expects a single graph");
  }
}

// w_g(u, .) for every user writing in g, as (u, entries) rows.
std::vector<std::vector<Entry>> graph_rows(const SentenceGraph& g, const SentenceCorpus& corpus,
                                           const UserSimConfig& cfg, const NeighborhoodSets& sets,
                                           std::size_t threads) {
  const bool degree_norm =
      cfg.match_norm == MatchNorm::in_degree || cfg.match_norm == MatchNorm::out_degree;
  WeightedDegrees degrees;
  if (cfg.matching == MatchScheme::many_to_many && degree_norm) {
    degrees = weighted_degrees(g, corpus, cfg.edge_weight);
  }
  const auto vertices = g.vertices();
  std::vector<std::vector<Entry>> rows(sets.users.size());

  parallel_for(sets.users.size(), threads, [&](std::size_t k) {
    const UserIdx u = sets.users[k];
    std::vector<Entry> acc;
    switch (cfg.matching) {
      case MatchScheme::one_to_one: {
        const auto& nu = sets.by_user[k];
        const double value =
            cfg.match_norm == MatchNorm::user_neighborhood ? 1.0 / static_cast<double>(nu.size()) : 1.0;
        for (auto v : nu) acc.push_back({v, value});
        break;
      }
      case MatchScheme::many_to_one: {
        for (auto h : sets.sentences_of_user[k]) {
          const auto& ns = sets.by_sentence[h];
          const double value = cfg.match_norm == MatchNorm::sentence_neighborhood
                                   ? 1.0 / static_cast<double>(ns.size())
                                   : 1.0;
          for (auto v : ns) acc.push_back({v, value});
        }
        break;
      }
      case MatchScheme::many_to_many: {
        for (auto h : sets.sentences_of_user[k]) {
          const double head_rating = corpus.rating_of(vertices[h]);
          for (const auto& e : g.out_edges(h)) {
            const UserIdx v = corpus.user_of(e.tail);
            if (v == u) continue;
            double term = edge_weight(head_rating, corpus.rating_of(e.tail), e.cosine, cfg.edge_weight);
            if (cfg.match_norm == MatchNorm::in_degree) {
              const double d = degrees.in[*g.local_index(e.tail)];
              term = d > 0.0 ? term / d : 0.0;
            } else if (cfg.match_norm == MatchNorm::out_degree) {
              const double d = degrees.out[h];
              term = d > 0.0 ? term / d : 0.0;
            }
            acc.push_back({v, term});
          }
        }
        break;
      }
    }
    auto merged = merge_entries(std::move(acc));
    std::vector<Entry> row;
    row.reserve(merged.size());
    for (auto e : merged) {
      if (cfg.matching == MatchScheme::many_to_many) e.weight = std::max(e.weight, 0.0);
      const double divisor = user_norm_divisor(u, e.user, g, corpus, sets, cfg.user_norm);
      e.weight = divisor > 0.0 ? e.weight / divisor : 0.0;
      if (e.weight > 0.0) row.push_back(e);
    }
    rows[k] = std::move(row);
  });
  return rows;
}

}  // namespace

MatchScheme parse_match_scheme(std::string_view name) {
  if (name == "one_to_one") return MatchScheme::one_to_one;
  if (name == "many_to_one") return MatchScheme::many_to_one;
  if (name == "many_to_many") return MatchScheme::many_to_many;
  throw Error("config", fmt::format("unknown matching scheme '{}'", name));
}

UserNorm parse_user_norm(std::string_view name) {
  if (name == "none") return UserNorm::none;
  if (name == "neighbor_sentences") return UserNorm::neighbor_sentences;
  if (name == "item_sentences") return UserNorm::item_sentences;
  if (name == "user_item_sentences") return UserNorm::user_item_sentences;
  throw Error("config", fmt::format("unknown user normalization '{}'", name));
}

MatchNorm parse_match_norm(std::string_view name) {
  if (name == "none") return MatchNorm::none;
  if (name == "user_neighborhood") return MatchNorm::user_neighborhood;
  if (name == "sentence_neighborhood") return MatchNorm::sentence_neighborhood;
  if (name == "in_degree") return MatchNorm::in_degree;
  if (name == "out_degree") return MatchNorm::out_degree;
  throw Error("config", fmt::format("unknown match normalization '{}'", name));
}

std::string_view to_string(MatchScheme v) {
  switch (v) {
    case MatchScheme::one_to_one:
      return "one_to_one";
    case MatchScheme::many_to_one:
      return "many_to_one";
    case MatchScheme::many_to_many:
      return "many_to_many";
  }
  return "?";
}

std::string_view to_string(UserNorm v) {
  switch (v) {
    case UserNorm::none:
      return "none";
    case UserNorm::neighbor_sentences:
      return "neighbor_sentences";
    case UserNorm::item_sentences:
      return "item_sentences";
    case UserNorm::user_item_sentences:
      return "user_item_sentences";
  }
  return "?";
}

std::string_view to_string(MatchNorm v) {
  switch (v) {
    case MatchNorm::none:
      return "none";
    case MatchNorm::user_neighborhood:
      return "user_neighborhood";
    case MatchNorm::sentence_neighborhood:
      return "sentence_neighborhood";
    case MatchNorm::in_degree:
      return "in_degree";
    case MatchNorm::out_degree:
      return "out_degree";
  }
  return "?";
}

std::optional<std::string> validate(const UserSimConfig& cfg) {
  if ((cfg.user_norm == UserNorm::item_sentences || cfg.user_norm == UserNorm::user_item_sentences) &&
      cfg.graph_scope != GraphScope::per_item) {
    return fmt::format("user normalization {} needs per-item graphs", to_string(cfg.user_norm));
  }
  switch (cfg.match_norm) {
    case MatchNorm::none:
      break;
    case MatchNorm::user_neighborhood:
      if (cfg.matching != MatchScheme::one_to_one) return "user_neighborhood norm needs one_to_one";
      break;
    case MatchNorm::sentence_neighborhood:
      if (cfg.matching != MatchScheme::many_to_one) return "sentence_neighborhood norm needs many_to_one";
      break;
    case MatchNorm::in_degree:
    case MatchNorm::out_degree:
      if (cfg.matching != MatchScheme::many_to_many) return "degree norms need many_to_many";
      break;
  }
  return std::nullopt;
}

std::string describe(const UserSimConfig& cfg) {
  return fmt::format("{}/{}/{}/{}/{}/{}", to_string(cfg.matching), to_string(cfg.edge_weight.scheme),
                     cfg.edge_weight.polarized ? "polarized" : "unpolarized", to_string(cfg.graph_scope),
                     to_string(cfg.user_norm), to_string(cfg.match_norm));
}

// ---------------------------------------------------------------------------
// UserWeightMatrix

UserWeightMatrix::UserWeightMatrix(std::size_t num_users, std::vector<std::vector<Entry>> rows) {
  if (rows.size() > num_users) throw Error("invalid_argument", "more rows than users");
  rows.resize(num_users);
  offsets_.assign(num_users + 1, 0);
  for (std::size_t u = 0; u < num_users; ++u) {
    for (const auto& e : merge_entries(std::move(rows[u]))) {
      if (e.user.value >= num_users) throw Error("invalid_argument", "weight column out of range");
      if (e.user.value == u || !(e.weight > 0.0)) continue;
      entries_.push_back(e);
    }
    offsets_[u + 1] = entries_.size();
  }
}

std::span<const UserWeightMatrix::Entry> UserWeightMatrix::row(UserIdx u) const {
  if (u.value >= num_users()) return {};
  return {entries_.data() + offsets_[u.value], offsets_[u.value + 1] - offsets_[u.value]};
}

double UserWeightMatrix::weight(UserIdx u, UserIdx v) const {
  auto r = row(u);
  auto it = std::lower_bound(r.begin(), r.end(), v, [](const Entry& e, UserIdx x) { return e.user < x; });
  return it != r.end() && it->user == v ? it->weight : 0.0;
}

// ---------------------------------------------------------------------------
// Neighborhoods and per-pair scorers

std::optional<std::size_t> NeighborhoodSets::find(UserIdx u) const {
  auto it = std::lower_bound(users.begin(), users.end(), u);
  if (it == users.end() || *it != u) return std::nullopt;
  return static_cast<std::size_t>(it - users.begin());
}

NeighborhoodSets neighborhood_sets(const SentenceGraph& g, const SentenceCorpus& corpus,
                                   const EdgeWeightConfig& cfg) {
  NeighborhoodSets sets;
  const auto vertices = g.vertices();
  const std::size_t n = g.num_vertices();
  sets.author.resize(n);
  sets.by_sentence.resize(n);
  for (std::size_t h = 0; h < n; ++h) {
    const UserIdx u = corpus.user_of(vertices[h]);
    sets.author[h] = u;
    const double head_rating = corpus.rating_of(vertices[h]);
    auto& ns = sets.by_sentence[h];
    for (const auto& e : g.out_edges(h)) {
      const UserIdx v = corpus.user_of(e.tail);
      if (v == u) continue;
      if (edge_weight(head_rating, corpus.rating_of(e.tail), e.cosine, cfg) > 0.0) ns.push_back(v);
    }
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  }
  sets.users = sets.author;
  std::sort(sets.users.begin(), sets.users.end());
  sets.users.erase(std::unique(sets.users.begin(), sets.users.end()), sets.users.end());
  sets.sentences_of_user.resize(sets.users.size());
  sets.by_user.resize(sets.users.size());
  for (std::size_t h = 0; h < n; ++h) sets.sentences_of_user[*sets.find(sets.author[h])].push_back(h);
  for (std::size_t k = 0; k < sets.users.size(); ++k) {
    auto& nu = sets.by_user[k];
    for (auto h : sets.sentences_of_user[k]) nu.insert(nu.end(), sets.by_sentence[h].begin(), sets.by_sentence[h].end());
    std::sort(nu.begin(), nu.end());
    nu.erase(std::unique(nu.begin(), nu.end()), nu.end());
  }
  return sets;
}

double one_to_one(UserIdx u, UserIdx v, const NeighborhoodSets& sets, const UserSimConfig& cfg) {
  auto k = sets.find(u);
  if (!k || u == v) return 0.0;
  const auto& nu = sets.by_user[*k];
  if (!contains(nu, v)) return 0.0;
  return cfg.match_norm == MatchNorm::user_neighborhood ? 1.0 / static_cast<double>(nu.size()) : 1.0;
}

double many_to_one(UserIdx u, UserIdx v, const NeighborhoodSets& sets, const UserSimConfig& cfg) {
  auto k = sets.find(u);
  if (!k || u == v) return 0.0;
  double total = 0.0;
  for (auto h : sets.sentences_of_user[*k]) {
    const auto& ns = sets.by_sentence[h];
    if (!contains(ns, v)) continue;
    total += cfg.match_norm == MatchNorm::sentence_neighborhood ? 1.0 / static_cast<double>(ns.size()) : 1.0;
  }
  return total;
}

double many_to_many(UserIdx u, UserIdx v, const SentenceGraph& g, const SentenceCorpus& corpus,
                    const NeighborhoodSets& sets, const WeightedDegrees& degrees,
                    const UserSimConfig& cfg) {
  auto k = sets.find(u);
  if (!k || u == v) return 0.0;
  const auto vertices = g.vertices();
  double total = 0.0;
  for (auto h : sets.sentences_of_user[*k]) {
    for (const auto& e : g.out_edges(h)) {
      if (corpus.user_of(e.tail) != v) continue;
      double term = edge_weight(corpus.rating_of(vertices[h]), corpus.rating_of(e.tail), e.cosine,
                                cfg.edge_weight);
      if (cfg.match_norm == MatchNorm::in_degree) {
        const double d = degrees.in.at(*g.local_index(e.tail));
        term = d > 0.0 ? term / d : 0.0;
      } else if (cfg.match_norm == MatchNorm::out_degree) {
        const double d = degrees.out.at(h);
        term = d > 0.0 ? term / d : 0.0;
      }
      total += term;
    }
  }
  return std::max(total, 0.0);
}

double user_norm_divisor(UserIdx u, UserIdx v, const SentenceGraph& g, const SentenceCorpus& corpus,
                         const NeighborhoodSets& sets, UserNorm norm) {
  switch (norm) {
    case UserNorm::none:
      return 1.0;
    case UserNorm::neighbor_sentences:
      return static_cast<double>(corpus.by_user(v).size());
    case UserNorm::item_sentences:
      if (!g.item()) throw Error("config", "item_sentences norm needs per-item graphs");
      return static_cast<double>(g.num_vertices());
    case UserNorm::user_item_sentences: {
      if (!g.item()) throw Error("config", "user_item_sentences norm needs per-item graphs");
      auto k = sets.find(u);
      return k ? static_cast<double>(sets.sentences_of_user[*k].size()) : 0.0;
    }
  }
  return 1.0;
}

double pair_weight(UserIdx u, UserIdx v, const SentenceGraph& g, const SentenceCorpus& corpus,
                   const NeighborhoodSets& sets, const WeightedDegrees& degrees,
                   const UserSimConfig& cfg) {
  if (auto why = validate(cfg)) throw Error("config", *why);
  double w = 0.0;
  switch (cfg.matching) {
    case MatchScheme::one_to_one:
      w = one_to_one(u, v, sets, cfg);
      break;
    case MatchScheme::many_to_one:
      w = many_to_one(u, v, sets, cfg);
      break;
    case MatchScheme::many_to_many:
      w = many_to_many(u, v, g, corpus, sets, degrees, cfg);
      break;
  }
  if (w == 0.0) return 0.0;
  const double divisor = user_norm_divisor(u, v, g, corpus, sets, cfg.user_norm);
  return divisor > 0.0 ? w / divisor : 0.0;
}

UserWeightMatrix compute_user_weights(std::span<const SentenceGraph> graphs, const SentenceCorpus& corpus,
                                      const UserSimConfig& cfg, std::size_t threads) {
  if (auto why = validate(cfg)) throw Error("config", *why);
  check_scope(graphs, cfg.graph_scope);

  struct Partial {
    std::vector<UserIdx> users;
    std::vector<std::vector<Entry>> rows;
  };
  std::vector<Partial> partials(graphs.size());
  const std::size_t inner = graphs.size() == 1 ? threads : 1;
  parallel_for(graphs.size(), graphs.size() == 1 ? 1 : threads, [&](std::size_t gi) {
    auto sets = neighborhood_sets(graphs[gi], corpus, cfg.edge_weight);
    partials[gi].rows = graph_rows(graphs[gi], corpus, cfg, sets, inner);
    partials[gi].users = std::move(sets.users);
  });

  std::vector<std::vector<Entry>> rows(corpus.num_users());
  for (auto& p : partials) {
    for (std::size_t k = 0; k < p.users.size(); ++k) {
      auto& dst = rows[p.users[k].value];
      dst.insert(dst.end(), p.rows[k].begin(), p.rows[k].end());
    }
  }
  return UserWeightMatrix(corpus.num_users(), std::move(rows));
}

// ---------------------------------------------------------------------------
// Ablation

CooccurrenceVariant parse_cooccurrence(std::string_view name) {
  if (name == "indicator") return CooccurrenceVariant::indicator;
  if (name == "u_count") return CooccurrenceVariant::u_count;
  if (name == "product") return CooccurrenceVariant::product;
  throw Error("config", fmt::format("unknown co-occurrence variant '{}'", name));
}

std::string_view to_string(CooccurrenceVariant v) {
  switch (v) {
    case CooccurrenceVariant::indicator:
      return "indicator";
    case CooccurrenceVariant::u_count:
      return "u_count";
    case CooccurrenceVariant::product:
      return "product";
  }
  return "?";
}

UserWeightMatrix cooccurrence_weights(const SentenceCorpus& corpus, CooccurrenceVariant variant) {
  std::vector<std::vector<Entry>> rows(corpus.num_users());
  for (std::size_t i = 0; i < corpus.num_items(); ++i) {
    std::vector<UserIdx> authors;
    for (auto s : corpus.by_item(ItemIdx{i})) authors.push_back(corpus.user_of(s));
    std::sort(authors.begin(), authors.end());
    std::vector<std::pair<UserIdx, double>> counts;
    for (auto u : authors) {
      if (!counts.empty() && counts.back().first == u) {
        counts.back().second += 1.0;
      } else {
        counts.emplace_back(u, 1.0);
      }
    }
    for (const auto& [u, cu] : counts) {
      for (const auto& [v, cv] : counts) {
        if (u == v) continue;
        double w = 1.0;
        if (variant == CooccurrenceVariant::u_count) w = cu;
        if (variant == CooccurrenceVariant::product) w = cu * cv;
        rows[u.value].push_back({v, w});
      }
    }
  }
  return UserWeightMatrix(corpus.num_users(), std::move(rows));
}

// ---------------------------------------------------------------------------
// Neighbors and evidence

std::vector<Neighbor> top_neighbors(UserIdx u, std::span<const UserIdx> raters, const UserWeightMatrix& w,
                                    std::size_t k_prime) {
  std::vector<Neighbor> out;
  for (auto v : raters) {
    if (v == u) continue;
    const double weight = w.weight(u, v);
    if (weight > 0.0) out.push_back({v, weight});
  }
  auto heavier = [](const Neighbor& a, const Neighbor& b) {
    return a.weight > b.weight || (a.weight == b.weight && a.user < b.user);
  };
  if (out.size() > k_prime) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k_prime), out.end(), heavier);
    out.resize(k_prime);
  } else {
    std::sort(out.begin(), out.end(), heavier);
  }
  return out;
}

std::vector<MatchEvidence> match_evidence(UserIdx u, UserIdx v, std::span<const SentenceGraph> graphs,
                                          const SentenceCorpus& corpus, const EdgeWeightConfig& cfg) {
  std::vector<MatchEvidence> out;
  for (auto s : corpus.by_user(u)) {
    const SentenceGraph* g = nullptr;
    if (graphs.size() == 1 && !graphs[0].item()) {
      g = &graphs[0];
    } else {
      const ItemIdx item = corpus.item_of(s);
      auto it = std::lower_bound(graphs.begin(), graphs.end(), item, [](const SentenceGraph& x, ItemIdx i) {
        return x.item().value_or(ItemIdx{0}) < i;
      });
      if (it != graphs.end() && it->item() == item) g = &*it;
    }
    if (!g) continue;
    auto local = g->local_index(s);
    if (!local) continue;
    for (const auto& e : g->out_edges(*local)) {
      if (corpus.user_of(e.tail) != v) continue;
      out.push_back({s, e.tail, edge_weight(corpus.rating_of(s), corpus.rating_of(e.tail), e.cosine, cfg)});
    }
  }
  std::sort(out.begin(), out.end(), [](const MatchEvidence& a, const MatchEvidence& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.head != b.head) return a.head < b.head;
    return a.tail < b.tail;
  });
  return out;
}

void write_weights_tsv(const std::filesystem::path& path, const UserWeightMatrix& w, const Dataset& train) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  for (std::size_t u = 0; u < w.num_users(); ++u) {
    for (const auto& e : w.row(UserIdx{u})) {
      out << fmt::format("{}\t{}\t{}\n", train.user_id(UserIdx{u}), train.user_id(e.user), e.weight);
    }
  }
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

}  // namespace textknn

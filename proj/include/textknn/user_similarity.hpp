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

// User-user weights from sentence matches.
//
// A match is a graph edge from a sentence of u to a sentence of v != u. The
// three counting schemes are:
//   one_to_one   : 1 if v appears in the neighborhood of any sentence of u
//   many_to_one  : number of u's sentences whose neighborhood contains v
//   many_to_many : max(sum of edge weights from S_u to S_v, 0)
// A sentence's neighborhood N(s) only holds users reached through edges with
// weight > 0, so polarized negative edges never count as matches for the
// first two schemes. Per-item graphs are scored independently and summed.

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
#include "textknn/sentence_graph.hpp"

namespace textknn {

enum class MatchScheme { one_to_one, many_to_one, many_to_many };

/// Divides a per-graph user weight w(u, v) by |S_v|, |S_i| or |S_{u,i}|.
enum class UserNorm { none, neighbor_sentences, item_sentences, user_item_sentences };

/// Divides the matching terms: by |N(u)| (one_to_one), |N(s)| (many_to_one),
/// or the weighted in/out-degree of the edge's tail/head (many_to_many).
enum class MatchNorm { none, user_neighborhood, sentence_neighborhood, in_degree, out_degree };

MatchScheme parse_match_scheme(std::string_view name);
UserNorm parse_user_norm(std::string_view name);
MatchNorm parse_match_norm(std::string_view name);
std::string_view to_string(MatchScheme v);
std::string_view to_string(UserNorm v);
std::string_view to_string(MatchNorm v);

struct UserSimConfig {
  MatchScheme matching = MatchScheme::many_to_many;
  EdgeWeightConfig edge_weight;
  GraphScope graph_scope = GraphScope::global;
  UserNorm user_norm = UserNorm::none;
  MatchNorm match_norm = MatchNorm::none;

  friend bool operator==(const UserSimConfig&, const UserSimConfig&) = default;
};

/// Reason the combination is invalid, or nullopt when it is usable.
std::optional<std::string> validate(const UserSimConfig& cfg);
/// Short stable label, e.g. "many_to_many/continuous/polarized/per_item/neighbor_sentences/in_degree".
std::string describe(const UserSimConfig& cfg);

/// Sparse non-negative user-user weights, CSR by head user u with columns
/// sorted by v. Zeros and the diagonal are never stored.
class UserWeightMatrix {
 public:
  struct Entry {
    UserIdx user;
    double weight;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  UserWeightMatrix() = default;
  /// Entries per row in any order. Duplicates within a row are summed in the
  /// given order; non-positive results and diagonal entries are dropped.
  UserWeightMatrix(std::size_t num_users, std::vector<std::vector<Entry>> rows);

  std::size_t num_users() const noexcept { return offsets_.size() - 1; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const Entry> row(UserIdx u) const;
  /// w(u, v); 0 when absent.
  double weight(UserIdx u, UserIdx v) const;

  friend bool operator==(const UserWeightMatrix&, const UserWeightMatrix&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
};

/// N(s) for every head vertex of one graph and N(u) for every user writing
/// in it, with the pieces needed by the per-pair scorers.
struct NeighborhoodSets {
  /// Author of each local vertex.
  std::vector<UserIdx> author;
  /// N(s) by local vertex, ascending, never containing the author.
  std::vector<std::vector<UserIdx>> by_sentence;
  /// Users with at least one sentence in the graph, ascending.
  std::vector<UserIdx> users;
  /// Local vertices of each entry of `users`.
  std::vector<std::vector<std::size_t>> sentences_of_user;
  /// N(u) for each entry of `users`, ascending.
  std::vector<std::vector<UserIdx>> by_user;

  /// Position of u in `users`.
  std::optional<std::size_t> find(UserIdx u) const;
};

NeighborhoodSets neighborhood_sets(const SentenceGraph& g, const SentenceCorpus& corpus,
                                   const EdgeWeightConfig& cfg);

// Per-pair scorers on a single graph, before the user normalization.
double one_to_one(UserIdx u, UserIdx v, const NeighborhoodSets& sets, const UserSimConfig& cfg);
double many_to_one(UserIdx u, UserIdx v, const NeighborhoodSets& sets, const UserSimConfig& cfg);
/// Includes the clamp at 0.
double many_to_many(UserIdx u, UserIdx v, const SentenceGraph& g, const SentenceCorpus& corpus,
                    const NeighborhoodSets& sets, const WeightedDegrees& degrees,
                    const UserSimConfig& cfg);

/// Divisor applied to w_g(u, v). 0 means the graph contributes nothing.
double user_norm_divisor(UserIdx u, UserIdx v, const SentenceGraph& g, const SentenceCorpus& corpus,
                         const NeighborhoodSets& sets, UserNorm norm);

/// w_g(u, v) on one graph, normalizations included.
double pair_weight(UserIdx u, UserIdx v, const SentenceGraph& g, const SentenceCorpus& corpus,
                   const NeighborhoodSets& sets, const WeightedDegrees& degrees,
                   const UserSimConfig& cfg);

/// Full weight matrix: the sum over `graphs` of w_g(u, v). The graphs must
/// match cfg.graph_scope. Throws Error("config") for an invalid cfg.
UserWeightMatrix compute_user_weights(std::span<const SentenceGraph> graphs, const SentenceCorpus& corpus,
                                      const UserSimConfig& cfg, std::size_t threads = 1);

enum class CooccurrenceVariant { indicator, u_count, product };

CooccurrenceVariant parse_cooccurrence(std::string_view name);
std::string_view to_string(CooccurrenceVariant v);

/// Similarity-agnostic ablation weights summed over items:
///   indicator : 1{|S_{u,i}| > 0 and |S_{v,i}| > 0}
///   u_count   : |S_{u,i}| * 1{|S_{v,i}| > 0}
///   product   : |S_{u,i}| * |S_{v,i}|
UserWeightMatrix cooccurrence_weights(const SentenceCorpus& corpus, CooccurrenceVariant variant);

struct Neighbor {
  UserIdx user;
  double weight;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Up to k' raters with w(u, v) > 0, heaviest first, ties by ascending user.
/// `raters` may contain u; it is skipped because the diagonal is empty.
std::vector<Neighbor> top_neighbors(UserIdx u, std::span<const UserIdx> raters, const UserWeightMatrix& w,
                                    std::size_t k_prime);

/// An edge from one of u's sentences to one of v's, with its weight.
struct MatchEvidence {
  SentenceId head;
  SentenceId tail;
  double weight;
};

/// All matches from u to v across `graphs`, heaviest first, ties by (head, tail).
std::vector<MatchEvidence> match_evidence(UserIdx u, UserIdx v, std::span<const SentenceGraph> graphs,
                                          const SentenceCorpus& corpus, const EdgeWeightConfig& cfg);

/// TSV rows: u, v, w (string ids).
void write_weights_tsv(const std::filesystem::path& path, const UserWeightMatrix& w, const Dataset& train);

}  // namespace textknn

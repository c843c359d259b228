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

#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

namespace textknn::testing {

Dataset make_dataset(const std::vector<Rating>& rows) {
  std::vector<Interaction> xs;
  for (const auto& r : rows) xs.push_back({r.user, r.item, r.rating, r.timestamp, r.text});
  return Dataset(std::move(xs));
}

RegressorInstance random_regressor_instance(std::mt19937_64& rng, std::size_t max_users, std::size_t max_items) {
  std::uniform_int_distribution<std::size_t> nu_dist(2, max_users), ni_dist(1, max_items), kp(1, 6);
  std::uniform_int_distribution<int> stars(1, 5);
  std::bernoulli_distribution rated(0.5), has_weight(0.6), coarse(0.4);
  std::uniform_real_distribution<double> fine(0.0, 3.0);
  const std::size_t nu = nu_dist(rng), ni = ni_dist(rng);
  RegressorInstance inst;
  inst.r.assign(nu, std::vector<std::optional<double>>(ni));
  std::vector<Rating> rows;
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t i = 0; i < ni; ++i) {
      if (!rated(rng)) continue;
      // Half-star ratings so that the baseline residuals are not all integers.
      const double r = stars(rng) - (coarse(rng) ? 0.5 : 0.0);
      const double value = r < 1.0 ? 1.0 : r;
      inst.r[u][i] = value;
      rows.push_back({fmt::format("u{:02}", u), fmt::format("i{:02}", i), value,
                      static_cast<std::int64_t>(rows.size())});
    }
  }
  // Make sure every user and item id exists.
  for (std::size_t u = 0; u < nu; ++u) {
    bool any = false;
    for (std::size_t i = 0; i < ni; ++i) any = any || inst.r[u][i].has_value();
    if (!any) {
      inst.r[u][u % ni] = 3.0;
      rows.push_back({fmt::format("u{:02}", u), fmt::format("i{:02}", u % ni), 3.0, static_cast<std::int64_t>(rows.size())});
    }
  }
  for (std::size_t i = 0; i < ni; ++i) {
    bool any = false;
    for (std::size_t u = 0; u < nu; ++u) any = any || inst.r[u][i].has_value();
    if (!any) {
      inst.r[0][i] = 4.0;
      rows.push_back({"u00", fmt::format("i{:02}", i), 4.0, static_cast<std::int64_t>(rows.size())});
    }
  }
  inst.train = make_dataset(rows);
  inst.w.assign(nu, std::vector<double>(nu, 0.0));
  std::vector<std::vector<UserWeightMatrix::Entry>> sparse(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t v = 0; v < nu; ++v) {
      if (u == v || !has_weight(rng)) continue;
      // Coarse weights create ties for the neighbor ordering.
      const double w = coarse(rng) ? static_cast<double>(stars(rng)) : fine(rng);
      if (!(w > 0.0)) continue;
      inst.w[u][v] = w;
      sparse[u].push_back({UserIdx{v}, w});
    }
  }
  inst.weights = UserWeightMatrix(nu, std::move(sparse));
  inst.k_prime = kp(rng);
  return inst;
}

ToyData table_toy(std::size_t last_user) {
  std::vector<Rating> rows;
  std::int64_t ts = 1;
  auto add = [&](std::string u, const std::vector<std::pair<std::string, double>>& items) {
    for (const auto& [i, r] : items) rows.push_back({u, i, r, ts++});
  };
  add("u0", {{"i0", 2}, {"i1", 4}, {"i2", 1}, {"i3", 5}});
  add("u1", {{"i0", 5}, {"i1", 1}, {"i2", 5}, {"i3", 1}});
  add("u2", {{"i2", 1}, {"i3", 5}});
  for (std::size_t f = 3; f <= last_user; ++f) add(fmt::format("u{}", f), {{"i0", 5}, {"i1", 5}, {"i2", 5}, {"i3", 5}});
  ToyData toy;
  toy.train = make_dataset(rows);
  toy.test = {{"u2", "i0", 2.5, ts, ""}, {"u2", "i1", 3.5, ts + 1, ""}};
  return toy;
}

EmbeddingTable random_table(std::mt19937_64& rng, std::size_t rows, std::size_t dim, double duplicate_rate) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<float> values;
  for (std::size_t r = 0; r < rows; ++r) {
    if (r > 0 && coin(rng) < duplicate_rate) {
      std::uniform_int_distribution<std::size_t> pick(0, r - 1);
      const std::size_t src = pick(rng);
      for (std::size_t d = 0; d < dim; ++d) values.push_back(values[src * dim + d]);
      continue;
    }
    std::vector<double> v(dim);
    double sq = 0.0;
    do {
      sq = 0.0;
      for (auto& x : v) {
        x = g(rng);
        sq += x * x;
      }
    } while (sq < 1e-6);
    for (auto x : v) values.push_back(static_cast<float>(x / std::sqrt(sq)));
  }
  return EmbeddingTable(dim, std::move(values));
}

RandomCorpus random_corpus(std::mt19937_64& rng, std::size_t max_sentences, std::size_t dim) {
  std::uniform_int_distribution<int> n_users(2, 6);
  std::uniform_int_distribution<int> n_items(1, 4);
  std::uniform_int_distribution<int> stars(1, 5);
  std::uniform_int_distribution<int> per_review(0, 3);
  std::bernoulli_distribution rated(0.7);
  const int nu = n_users(rng);
  const int ni = n_items(rng);
  std::vector<Rating> rows;
  std::vector<SentenceRecord> records;
  std::int64_t ts = 0;
  for (int u = 0; u < nu; ++u) {
    for (int i = 0; i < ni; ++i) {
      if (!rated(rng)) continue;
      const double r = stars(rng);
      const auto uid = fmt::format("u{}", u);
      const auto iid = fmt::format("i{}", i);
      rows.push_back({uid, iid, r, ts++});
      const int n = per_review(rng);
      for (int j = 0; j < n && records.size() < max_sentences; ++j) {
        records.push_back({SentenceId{records.size()}, uid, iid, r, fmt::format("s{}", records.size()),
                           static_cast<std::uint32_t>(j)});
      }
    }
  }
  if (rows.empty()) rows.push_back({"u0", "i0", 3.0, 0});
  RandomCorpus out;
  out.train = make_dataset(rows);
  out.corpus = SentenceCorpus(out.train, std::move(records));
  out.table = random_table(rng, out.corpus.size(), dim, 0.1);
  return out;
}

std::vector<std::vector<Edge>> brute_knn(const EmbeddingTable& table, const std::vector<SentenceId>& vertices,
                                         std::size_t k, std::optional<double> min_similarity) {
  std::vector<std::vector<Edge>> out;
  for (auto h : vertices) {
    std::vector<Edge> all;
    const auto a = table.row(h);
    for (auto t : vertices) {
      if (t == h) continue;
      const auto b = table.row(t);
      double dot = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) dot += static_cast<double>(a[d]) * static_cast<double>(b[d]);
      if (min_similarity && dot < *min_similarity) continue;
      all.push_back({t, dot});
    }
    std::sort(all.begin(), all.end(), [](const Edge& x, const Edge& y) {
      if (x.cosine != y.cosine) return x.cosine > y.cosine;
      return x.tail < y.tail;
    });
    if (all.size() > k) all.resize(k);
    out.push_back(std::move(all));
  }
  return out;
}

double brute_user_weight(UserIdx u, UserIdx v, const std::vector<SentenceGraph>& graphs,
                         const SentenceCorpus& corpus, const UserSimConfig& cfg) {
  if (u == v) return 0.0;
  double total = 0.0;
  for (const auto& g : graphs) {
    const std::vector<SentenceId> V(g.vertices().begin(), g.vertices().end());
    // s(a, b) for every ordered vertex pair; 0 for non-edges.
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> s;
    for (std::size_t h = 0; h < V.size(); ++h) {
      for (const auto& e : g.out_edges(h)) {
        s[{V[h].value, e.tail.value}] =
            edge_weight(corpus.at(V[h]), corpus.at(e.tail), e.cosine, cfg.edge_weight);
      }
    }
    auto weight = [&](SentenceId a, SentenceId b) {
      auto it = s.find({a.value, b.value});
      return it == s.end() ? 0.0 : it->second;
    };
    auto neighborhood = [&](SentenceId a) {
      std::set<std::uint32_t> users;
      for (auto b : V) {
        const auto author = corpus.user_of(b);
        if (author != corpus.user_of(a) && weight(a, b) > 0.0) users.insert(author.value);
      }
      return users;
    };
    std::vector<SentenceId> su;
    std::vector<SentenceId> sv;
    for (auto x : V) {
      if (corpus.user_of(x) == u) su.push_back(x);
      if (corpus.user_of(x) == v) sv.push_back(x);
    }

    double w = 0.0;
    switch (cfg.matching) {
      case MatchScheme::one_to_one: {
        std::set<std::uint32_t> nu;
        for (auto a : su) {
          auto n = neighborhood(a);
          nu.insert(n.begin(), n.end());
        }
        if (nu.count(v.value)) {
          w = 1.0;
          if (cfg.match_norm == MatchNorm::user_neighborhood) w /= static_cast<double>(nu.size());
        }
        break;
      }
      case MatchScheme::many_to_one: {
        for (auto a : su) {
          auto n = neighborhood(a);
          if (!n.count(v.value)) continue;
          w += cfg.match_norm == MatchNorm::sentence_neighborhood ? 1.0 / static_cast<double>(n.size()) : 1.0;
        }
        break;
      }
      case MatchScheme::many_to_many: {
        for (auto a : su) {
          for (auto b : sv) {
            double term = weight(a, b);
            if (term == 0.0) continue;
            if (cfg.match_norm == MatchNorm::in_degree) {
              double d = 0.0;
              for (auto x : V) d += std::abs(weight(x, b));
              term = d > 0.0 ? term / d : 0.0;
            } else if (cfg.match_norm == MatchNorm::out_degree) {
              double d = 0.0;
              for (auto x : V) d += std::abs(weight(a, x));
              term = d > 0.0 ? term / d : 0.0;
            }
            w += term;
          }
        }
        w = std::max(w, 0.0);
        break;
      }
    }
    if (w == 0.0) continue;
    double divisor = 1.0;
    if (cfg.user_norm == UserNorm::neighbor_sentences) divisor = static_cast<double>(corpus.by_user(v).size());
    if (cfg.user_norm == UserNorm::item_sentences) divisor = static_cast<double>(V.size());
    if (cfg.user_norm == UserNorm::user_item_sentences) divisor = static_cast<double>(su.size());
    if (divisor > 0.0) total += w / divisor;
  }
  return total;
}

namespace {

std::vector<std::pair<double, std::size_t>> formula_neighbors(std::size_t u, std::size_t i, const DenseWeights& w,
                                                              const std::vector<std::vector<std::optional<double>>>& r,
                                                              std::size_t k_prime) {
  std::vector<std::pair<double, std::size_t>> cand;  // (weight, v)
  for (std::size_t v = 0; v < r.size(); ++v) {
    if (v == u || !r[v][i] || !(w[u][v] > 0.0)) continue;
    cand.emplace_back(w[u][v], v);
  }
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (cand.size() > k_prime) cand.resize(k_prime);
  return cand;
}

double clamp15(double x) { return std::min(5.0, std::max(1.0, x)); }

}  // namespace

FormulaOutcome formula_knn(std::size_t u, std::size_t i, const DenseWeights& w,
                           const std::vector<std::vector<std::optional<double>>>& r, std::size_t k_prime,
                           double mean) {
  const auto nb = formula_neighbors(u, i, w, r, k_prime);
  double num = 0.0;
  double den = 0.0;
  for (const auto& [wv, v] : nb) {
    num += wv * *r[v][i];
    den += wv;
  }
  if (nb.empty() || den == 0.0) return {clamp15(mean), true};
  return {clamp15(num / den), false};
}

FormulaOutcome formula_bknn(std::size_t u, std::size_t i, const DenseWeights& w,
                            const std::vector<std::vector<std::optional<double>>>& r,
                            const std::vector<std::vector<double>>& b, std::size_t k_prime) {
  const auto nb = formula_neighbors(u, i, w, r, k_prime);
  double num = 0.0;
  double den = 0.0;
  for (const auto& [wv, v] : nb) {
    num += wv * (*r[v][i] - b[v][i]);
    den += wv;
  }
  if (nb.empty() || den == 0.0) return {clamp15(b[u][i]), true};
  return {clamp15(b[u][i] + num / den), false};
}

namespace {

// Positions kept when restricting to the given user/item masks, or nullopt
// when some kept user or item has fewer than k interactions.
std::optional<std::vector<std::size_t>> restrict_if_core(const Dataset& data, std::uint32_t users, std::uint32_t items,
                                                         std::size_t k) {
  std::vector<std::size_t> du(data.num_users(), 0);
  std::vector<std::size_t> di(data.num_items(), 0);
  std::vector<std::size_t> kept;
  for (std::size_t p = 0; p < data.size(); ++p) {
    const auto u = data.user_of(p).value;
    const auto i = data.item_of(p).value;
    if ((users >> u & 1U) && (items >> i & 1U)) {
      ++du[u];
      ++di[i];
      kept.push_back(p);
    }
  }
  for (std::size_t u = 0; u < data.num_users(); ++u) {
    if ((users >> u & 1U) && du[u] < k) return std::nullopt;
  }
  for (std::size_t i = 0; i < data.num_items(); ++i) {
    if ((items >> i & 1U) && di[i] < k) return std::nullopt;
  }
  return kept;
}

}  // namespace

std::vector<std::size_t> brute_kcore(const Dataset& data, std::size_t k) {
  std::vector<std::size_t> best;
  const std::uint32_t n_user_sets = 1U << data.num_users();
  for (std::uint32_t users = 1; users < n_user_sets; ++users) {
    // With users fixed, an item's degree is fixed, so take every item that
    // reaches k; any smaller item set only lowers user degrees.
    std::vector<std::size_t> di(data.num_items(), 0);
    for (std::size_t p = 0; p < data.size(); ++p) {
      if (users >> data.user_of(p).value & 1U) ++di[data.item_of(p).value];
    }
    std::uint32_t items = 0;
    for (std::size_t i = 0; i < data.num_items(); ++i) {
      if (di[i] >= k) items |= 1U << i;
    }
    if (items == 0) continue;
    auto kept = restrict_if_core(data, users, items, k);
    if (kept && kept->size() > best.size()) best = std::move(*kept);
  }
  return best;
}

std::vector<std::size_t> brute_kcore_full(const Dataset& data, std::size_t k) {
  std::vector<std::size_t> best;
  const std::uint32_t n_user_sets = 1U << data.num_users();
  const std::uint32_t n_item_sets = 1U << data.num_items();
  for (std::uint32_t users = 1; users < n_user_sets; ++users) {
    for (std::uint32_t items = 1; items < n_item_sets; ++items) {
      auto kept = restrict_if_core(data, users, items, k);
      if (kept && kept->size() > best.size()) best = std::move(*kept);
    }
  }
  return best;
}

BaselineModel least_squares_baseline(const Dataset& train, double reg_u, double reg_i) {
  const std::size_t nu = train.num_users();
  const std::size_t ni = train.num_items();
  double mu = 0.0;
  for (const auto& x : train.interactions()) mu += x.rating;
  mu /= static_cast<double>(train.size());
  // Unknowns [b_u ; b_i]; stationarity of sum (r - mu - b_u - b_i)^2 + reg terms.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nu + ni), static_cast<Eigen::Index>(nu + ni));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nu + ni));
  for (std::size_t u = 0; u < nu; ++u) A(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u)) += reg_u;
  for (std::size_t i = 0; i < ni; ++i) {
    A(static_cast<Eigen::Index>(nu + i), static_cast<Eigen::Index>(nu + i)) += reg_i;
  }
  for (std::size_t p = 0; p < train.size(); ++p) {
    const auto u = static_cast<Eigen::Index>(train.user_of(p).value);
    const auto i = static_cast<Eigen::Index>(nu + train.item_of(p).value);
    const double res = train.at(p).rating - mu;
    A(u, u) += 1.0;
    A(i, i) += 1.0;
    A(u, i) += 1.0;
    A(i, u) += 1.0;
    rhs(u) += res;
    rhs(i) += res;
  }
  const Eigen::VectorXd x = A.ldlt().solve(rhs);
  BaselineModel m;
  m.mu = mu;
  for (std::size_t u = 0; u < nu; ++u) m.b_u.push_back(x(static_cast<Eigen::Index>(u)));
  for (std::size_t i = 0; i < ni; ++i) m.b_i.push_back(x(static_cast<Eigen::Index>(nu + i)));
  return m;
}

}  // namespace textknn::testing

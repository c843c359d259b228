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

#include "textknn/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "json.hpp"
#include "textknn/parallel.hpp"

namespace textknn {
namespace {

using Cell = TrainRatings::Cell;

std::span<const Cell> csr_row(const std::vector<std::size_t>& offsets, const std::vector<Cell>& cells,
                              std::size_t r) {
  if (r + 1 >= offsets.size()) return {};
  return {cells.data() + offsets[r], offsets[r + 1] - offsets[r]};
}

std::optional<double> find_cell(std::span<const Cell> row, std::uint32_t key) {
  auto it = std::lower_bound(row.begin(), row.end(), key, [](const Cell& c, std::uint32_t k) { return c.other < k; });
  if (it == row.end() || it->other != key) return std::nullopt;
  return it->rating;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

struct Resolved {
  std::optional<UserIdx> user;
  std::optional<ItemIdx> item;
};

Resolved resolve(const Dataset& train, const PredictionTarget& t) {
  return {train.find_user(t.user_id), train.find_item(t.item_id)};
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainRatings

TrainRatings::TrainRatings(const Dataset& train) {
  double sum = 0.0;
  for (const auto& x : train.interactions()) sum += x.rating;
  mean_ = train.empty() ? 0.0 : sum / static_cast<double>(train.size());

  user_offsets_.assign(train.num_users() + 1, 0);
  std::vector<std::size_t> item_counts(train.num_items(), 0);
  for (std::size_t u = 0; u < train.num_users(); ++u) {
    std::vector<Cell> row;
    // History is time-ascending, so the last write per item is the latest.
    for (auto pos : train.user_history(UserIdx{u})) {
      row.push_back({train.item_of(pos).value, train.at(pos).rating});
    }
    std::stable_sort(row.begin(), row.end(), [](const Cell& a, const Cell& b) { return a.other < b.other; });
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k + 1 < row.size() && row[k + 1].other == row[k].other) continue;
      by_user_.push_back(row[k]);
      ++item_counts[row[k].other];
    }
    user_offsets_[u + 1] = by_user_.size();
  }

  item_offsets_.assign(train.num_items() + 1, 0);
  for (std::size_t i = 0; i < train.num_items(); ++i) item_offsets_[i + 1] = item_offsets_[i] + item_counts[i];
  by_item_.resize(by_user_.size());
  rater_ids_.resize(by_user_.size());
  std::vector<std::size_t> fill(item_offsets_.begin(), item_offsets_.end() - 1);
  for (std::size_t u = 0; u < train.num_users(); ++u) {
    for (const auto& c : csr_row(user_offsets_, by_user_, u)) {
      const std::size_t slot = fill[c.other]++;
      by_item_[slot] = {static_cast<std::uint32_t>(u), c.rating};
      rater_ids_[slot] = UserIdx{u};
    }
  }
}

std::span<const Cell> TrainRatings::items_of(UserIdx u) const { return csr_row(user_offsets_, by_user_, u.value); }

std::span<const Cell> TrainRatings::raters_of(ItemIdx i) const { return csr_row(item_offsets_, by_item_, i.value); }

std::span<const UserIdx> TrainRatings::raters(ItemIdx i) const {
  if (i.value + 1 >= item_offsets_.size()) return {};
  return {rater_ids_.data() + item_offsets_[i.value], item_offsets_[i.value + 1] - item_offsets_[i.value]};
}

std::optional<double> TrainRatings::rating(UserIdx u, ItemIdx i) const { return find_cell(items_of(u), i.value); }

// ---------------------------------------------------------------------------
// Baseline

BaselineModel fit_baseline(const Dataset& train, const BaselineParams& params) {
  if (train.empty()) throw Error("invalid_argument", "cannot fit a baseline on an empty train set");
  BaselineModel m;
  for (const auto& x : train.interactions()) m.mu += x.rating;
  m.mu /= static_cast<double>(train.size());
  m.b_u.assign(train.num_users(), 0.0);
  m.b_i.assign(train.num_items(), 0.0);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t i = 0; i < train.num_items(); ++i) {
      const auto hist = train.item_history(ItemIdx{i});
      double dev = 0.0;
      for (auto pos : hist) dev += train.at(pos).rating - m.mu - m.b_u[train.user_of(pos).value];
      m.b_i[i] = dev / (params.reg_i + static_cast<double>(hist.size()));
    }
    for (std::size_t u = 0; u < train.num_users(); ++u) {
      const auto hist = train.user_history(UserIdx{u});
      double dev = 0.0;
      for (auto pos : hist) dev += train.at(pos).rating - m.mu - m.b_i[train.item_of(pos).value];
      m.b_u[u] = dev / (params.reg_u + static_cast<double>(hist.size()));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Neighbor regressors

namespace {

std::vector<NeighborEvidence> gather(std::optional<UserIdx> u, std::optional<ItemIdx> i, const UserWeightMatrix& w,
                                     const TrainRatings& ratings, std::size_t k_prime) {
  std::vector<NeighborEvidence> out;
  if (!u || !i || i->value >= ratings.num_items()) return out;
  const auto cells = ratings.raters_of(*i);
  for (const auto& n : top_neighbors(*u, ratings.raters(*i), w, k_prime)) {
    out.push_back({n.user, n.weight, *find_cell(cells, n.user.value)});
  }
  return out;
}

}  // namespace

PredictionOutcome knn_predict(std::optional<UserIdx> u, std::optional<ItemIdx> i, const UserWeightMatrix& w,
                              const TrainRatings& ratings, std::size_t k_prime) {
  PredictionOutcome out;
  out.neighbors = gather(u, i, w, ratings, k_prime);
  double num = 0.0;
  double den = 0.0;
  for (const auto& n : out.neighbors) {
    num += n.weight * n.rating;
    den += n.weight;
  }
  if (den > 0.0) {
    out.estimate = clamp_rating(num / den);
  } else {
    out.estimate = clamp_rating(ratings.mean());
    out.fallback_used = true;
  }
  return out;
}

PredictionOutcome bknn_predict(std::optional<UserIdx> u, std::optional<ItemIdx> i, const UserWeightMatrix& w,
                               const TrainRatings& ratings, const BaselineModel& baseline, std::size_t k_prime) {
  PredictionOutcome out;
  out.neighbors = gather(u, i, w, ratings, k_prime);
  const double b_ui = baseline.estimate(u, i);
  double num = 0.0;
  double den = 0.0;
  for (const auto& n : out.neighbors) {
    num += n.weight * (n.rating - baseline.estimate(n.user, i));
    den += n.weight;
  }
  if (den > 0.0) {
    out.estimate = clamp_rating(b_ui + num / den);
  } else {
    out.estimate = clamp_rating(b_ui);
    out.fallback_used = true;
  }
  return out;
}

UserWeightMatrix msd_similarity(const TrainRatings& ratings, std::size_t min_support, std::size_t threads) {
  const std::size_t n = ratings.num_users();
  std::vector<std::vector<UserWeightMatrix::Entry>> rows(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min(resolve_threads(threads), n));
  // One dense scratch pair per worker; worker w handles users w, w + workers, ...
  parallel_for(workers, workers, [&](std::size_t worker) {
    std::vector<double> sq(n, 0.0);
    std::vector<std::uint32_t> count(n, 0);
    std::vector<std::uint32_t> touched;
    for (std::size_t u = worker; u < n; u += workers) {
      for (const auto& ci : ratings.items_of(UserIdx{u})) {
        for (const auto& cv : ratings.raters_of(ItemIdx{ci.other})) {
          if (cv.other == u) continue;
          if (count[cv.other] == 0) touched.push_back(cv.other);
          const double d = ci.rating - cv.rating;
          sq[cv.other] += d * d;
          ++count[cv.other];
        }
      }
      std::sort(touched.begin(), touched.end());
      for (auto v : touched) {
        if (count[v] >= min_support && count[v] > 0) {
          const double msd = sq[v] / static_cast<double>(count[v]);
          rows[u].push_back({UserIdx{v}, 1.0 / (msd + 1.0)});
        }
        sq[v] = 0.0;
        count[v] = 0;
      }
      touched.clear();
    }
  });
  return UserWeightMatrix(n, std::move(rows));
}

// ---------------------------------------------------------------------------
// Random baselines

NormalModel fit_normal(const Dataset& train) {
  NormalModel m;
  if (train.empty()) return m;
  for (const auto& x : train.interactions()) m.mu += x.rating;
  m.mu /= static_cast<double>(train.size());
  double var = 0.0;
  for (const auto& x : train.interactions()) var += (x.rating - m.mu) * (x.rating - m.mu);
  m.sigma = std::sqrt(var / static_cast<double>(train.size()));
  return m;
}

PredictionOutcome uniform_predict(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(kMinRating, kMaxRating);
  return {dist(rng), false, {}};
}

PredictionOutcome normal_predict(const NormalModel& model, std::mt19937_64& rng) {
  if (!(model.sigma > 0.0)) return {clamp_rating(model.mu), false, {}};
  std::normal_distribution<double> dist(model.mu, model.sigma);
  return {clamp_rating(dist(rng)), false, {}};
}

// ---------------------------------------------------------------------------
// SVD

double MFModel::raw(std::optional<UserIdx> u, std::optional<ItemIdx> i) const {
  // Cold start on either side: the global mean alone.
  if (!u || !i) return mu;
  double est = mu + b_u.at(u->value) + b_i.at(i->value);
  const double* pu = p.data() + u->value * factors;
  const double* qi = q.data() + i->value * factors;
  for (std::size_t f = 0; f < factors; ++f) est += pu[f] * qi[f];
  return est;
}

MFModel fit_svd(const Dataset& train, const SvdParams& params, std::uint64_t seed) {
  if (train.empty()) throw Error("invalid_argument", "cannot fit SVD on an empty train set");
  MFModel m;
  m.factors = params.factors;
  for (const auto& x : train.interactions()) m.mu += x.rating;
  m.mu /= static_cast<double>(train.size());
  m.b_u.assign(train.num_users(), 0.0);
  m.b_i.assign(train.num_items(), 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, params.init_std);
  m.p.resize(train.num_users() * m.factors);
  m.q.resize(train.num_items() * m.factors);
  for (auto& x : m.p) x = init(rng);
  for (auto& x : m.q) x = init(rng);

  const std::size_t f_count = m.factors;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t pos = 0; pos < train.size(); ++pos) {
      const auto u = train.user_of(pos).value;
      const auto i = train.item_of(pos).value;
      double* pu = m.p.data() + u * f_count;
      double* qi = m.q.data() + i * f_count;
      double dot = 0.0;
      for (std::size_t f = 0; f < f_count; ++f) dot += pu[f] * qi[f];
      const double err = train.at(pos).rating - (m.mu + m.b_u[u] + m.b_i[i] + dot);
      m.b_u[u] += params.lr * (err - params.reg * m.b_u[u]);
      m.b_i[i] += params.lr * (err - params.reg * m.b_i[i]);
      for (std::size_t f = 0; f < f_count; ++f) {
        const double puf = pu[f];
        const double qif = qi[f];
        pu[f] += params.lr * (err * qif - params.reg * puf);
        qi[f] += params.lr * (err * puf - params.reg * qif);
      }
    }
  }
  return m;
}

PredictionOutcome svd_predict(const MFModel& model, std::optional<UserIdx> u, std::optional<ItemIdx> i) {
  return {clamp_rating(model.raw(u, i)), !u || !i, {}};
}

// ---------------------------------------------------------------------------
// Predictor adapters

PredictionOutcome BaselinePredictor::predict(const PredictionTarget& target) {
  auto r = resolve(train_, target);
  return {clamp_rating(model_.estimate(r.user, r.item)), false, {}};
}

NeighborPredictor::NeighborPredictor(std::string name, const Dataset& train, const TrainRatings& ratings,
                                     const UserWeightMatrix& weights, std::size_t k_prime,
                                     const BaselineModel* baseline)
    : name_(std::move(name)),
      train_(train),
      ratings_(ratings),
      weights_(weights),
      k_prime_(k_prime),
      baseline_(baseline) {}

PredictionOutcome NeighborPredictor::predict(const PredictionTarget& target) {
  auto r = resolve(train_, target);
  if (baseline_) return bknn_predict(r.user, r.item, weights_, ratings_, *baseline_, k_prime_);
  return knn_predict(r.user, r.item, weights_, ratings_, k_prime_);
}

PredictionOutcome SvdPredictor::predict(const PredictionTarget& target) {
  auto r = resolve(train_, target);
  return svd_predict(model_, r.user, r.item);
}

OraclePredictor::OraclePredictor(std::span<const Interaction> truth) { add(truth); }

void OraclePredictor::add(std::span<const Interaction> truth) {
  for (const auto& x : truth) truth_[{x.user_id, x.item_id, x.timestamp}] = x.rating;
}

PredictionOutcome OraclePredictor::predict(const PredictionTarget& target) {
  auto it = truth_.find({target.user_id, target.item_id, target.timestamp});
  if (it == truth_.end()) {
    throw Error("invalid_argument",
                fmt::format("oracle has no rating for ({}, {}, {})", target.user_id, target.item_id, target.timestamp));
  }
  return {it->second, false, {}};
}

// ---------------------------------------------------------------------------
// Dumps

void write_baseline_json(const std::filesystem::path& path, const BaselineModel& model, const Dataset& train) {
  nlohmann::ordered_json doc;
  doc["mu"] = model.mu;
  auto& bu = doc["b_u"] = nlohmann::ordered_json::object();
  for (std::size_t u = 0; u < model.b_u.size(); ++u) bu[train.user_id(UserIdx{u})] = model.b_u[u];
  auto& bi = doc["b_i"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < model.b_i.size(); ++i) bi[train.item_id(ItemIdx{i})] = model.b_i[i];
  write_json(path, doc);
}

void write_svd_json(const std::filesystem::path& path, const MFModel& model, const Dataset& train) {
  nlohmann::ordered_json doc;
  doc["factors"] = model.factors;
  doc["mu"] = model.mu;
  auto& users = doc["users"] = nlohmann::ordered_json::object();
  for (std::size_t u = 0; u < model.b_u.size(); ++u) {
    const auto first = model.p.begin() + static_cast<std::ptrdiff_t>(u * model.factors);
    users[train.user_id(UserIdx{u})] = {
        {"bias", model.b_u[u]},
        {"factors", std::vector<double>(first, first + static_cast<std::ptrdiff_t>(model.factors))}};
  }
  auto& items = doc["items"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < model.b_i.size(); ++i) {
    const auto first = model.q.begin() + static_cast<std::ptrdiff_t>(i * model.factors);
    items[train.item_id(ItemIdx{i})] = {
        {"bias", model.b_i[i]},
        {"factors", std::vector<double>(first, first + static_cast<std::ptrdiff_t>(model.factors))}};
  }
  write_json(path, doc);
}

void write_predictions_tsv(const std::filesystem::path& path, std::span<const PredictionRow> rows,
                           std::string_view model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", fmt::format("cannot write '{}'", path.string()));
  out << "user_id\titem_id\trating\testimate\tfallback\tmodel\n";
  for (const auto& r : rows) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.user_id, r.item_id, r.rating, r.estimate,
                       r.fallback_used ? 1 : 0, model);
  }
  if (!out) throw Error("io", fmt::format("write failed for '{}'", path.string()));
}

}  // namespace textknn

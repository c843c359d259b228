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

// Rating predictors: bias baseline, user k-NN regressors over any weight
// matrix, random baselines and a Funk-style SVD.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "textknn/common.hpp"
#include "textknn/corpus.hpp"
#include "textknn/user_similarity.hpp"

namespace textknn {

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

inline double clamp_rating(double r) { return r < kMinRating ? kMinRating : (r > kMaxRating ? kMaxRating : r); }

/// r_vi lookups in both directions. When a user rated an item several times
/// the latest interaction (ties: later in input) is the one used.
class TrainRatings {
 public:
  struct Cell {
    std::uint32_t other;  // item for by-user rows, user for by-item rows
    double rating;
  };

  TrainRatings() = default;
  explicit TrainRatings(const Dataset& train);

  std::size_t num_users() const noexcept { return user_offsets_.size() - 1; }
  std::size_t num_items() const noexcept { return item_offsets_.size() - 1; }
  /// Mean over every train interaction (duplicates included).
  double mean() const noexcept { return mean_; }

  /// (item, rating) ascending by item.
  std::span<const Cell> items_of(UserIdx u) const;
  /// (user, rating) ascending by user.
  std::span<const Cell> raters_of(ItemIdx i) const;
  /// Users who rated i, ascending.
  std::span<const UserIdx> raters(ItemIdx i) const;
  std::optional<double> rating(UserIdx u, ItemIdx i) const;

 private:
  double mean_ = 0.0;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<Cell> by_user_;
  std::vector<std::size_t> item_offsets_{0};
  std::vector<Cell> by_item_;
  std::vector<UserIdx> rater_ids_;
};

struct BaselineParams {
  double reg_u = 15.0;
  double reg_i = 10.0;
  std::size_t epochs = 10;

  friend bool operator==(const BaselineParams&, const BaselineParams&) = default;
};

/// b_ui = mu + b_u + b_i, biases indexed by train user/item. Unknown ids
/// (nullopt) have bias 0.
struct BaselineModel {
  double mu = 0.0;
  std::vector<double> b_u;
  std::vector<double> b_i;

  double user_bias(std::optional<UserIdx> u) const { return u ? b_u.at(u->value) : 0.0; }
  double item_bias(std::optional<ItemIdx> i) const { return i ? b_i.at(i->value) : 0.0; }
  double estimate(std::optional<UserIdx> u, std::optional<ItemIdx> i) const {
    return mu + user_bias(u) + item_bias(i);
  }
};

/// Alternating least squares; every epoch updates all b_i, then all b_u.
/// Throws Error("invalid_argument") on an empty train set.
BaselineModel fit_baseline(const Dataset& train, const BaselineParams& params = {});

struct NeighborEvidence {
  UserIdx user;
  double weight;
  double rating;

  friend bool operator==(const NeighborEvidence&, const NeighborEvidence&) = default;
};

struct PredictionOutcome {
  double estimate = 0.0;  // clamped to [1, 5]
  bool fallback_used = false;
  std::vector<NeighborEvidence> neighbors;
};

/// Weighted mean of the k' heaviest raters of i; falls back to the train mean.
PredictionOutcome knn_predict(std::optional<UserIdx> u, std::optional<ItemIdx> i, const UserWeightMatrix& w,
                              const TrainRatings& ratings, std::size_t k_prime);

/// b_ui plus the weighted mean of the raters' residuals; falls back to b_ui.
PredictionOutcome bknn_predict(std::optional<UserIdx> u, std::optional<ItemIdx> i, const UserWeightMatrix& w,
                               const TrainRatings& ratings, const BaselineModel& baseline, std::size_t k_prime);

/// 1 / (msd + 1) over co-rated items; pairs with fewer than min_support
/// co-rated items are absent.
UserWeightMatrix msd_similarity(const TrainRatings& ratings, std::size_t min_support = 1,
                                std::size_t threads = 1);

/// Maximum-likelihood normal fit of the train ratings.
struct NormalModel {
  double mu = 0.0;
  double sigma = 0.0;
};

NormalModel fit_normal(const Dataset& train);
PredictionOutcome uniform_predict(std::mt19937_64& rng);
PredictionOutcome normal_predict(const NormalModel& model, std::mt19937_64& rng);

struct SvdParams {
  std::size_t factors = 100;
  double lr = 0.005;
  double reg = 0.02;
  std::size_t epochs = 20;
  double init_std = 0.1;

  friend bool operator==(const SvdParams&, const SvdParams&) = default;
};

struct MFModel {
  std::size_t factors = 0;
  double mu = 0.0;
  std::vector<double> b_u;
  std::vector<double> b_i;
  std::vector<double> p;  // num_users x factors
  std::vector<double> q;  // num_items x factors

  /// Unclamped; mu alone when the user or the item is unknown.
  double raw(std::optional<UserIdx> u, std::optional<ItemIdx> i) const;
};

/// SGD over the train interactions in input order, factors drawn from
/// N(0, init_std) with a generator seeded by `seed` (users first, then items).
MFModel fit_svd(const Dataset& train, const SvdParams& params, std::uint64_t seed);
PredictionOutcome svd_predict(const MFModel& model, std::optional<UserIdx> u, std::optional<ItemIdx> i);

// ---------------------------------------------------------------------------
// Predictors addressed by string ids.

struct PredictionTarget {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string_view name() const = 0;
  /// Not const: the random baselines advance their generator.
  virtual PredictionOutcome predict(const PredictionTarget& target) = 0;
};

class UniformPredictor final : public Predictor {
 public:
  explicit UniformPredictor(std::uint64_t seed) : rng_(seed) {}
  std::string_view name() const override { return "uniform"; }
  PredictionOutcome predict(const PredictionTarget&) override { return uniform_predict(rng_); }

 private:
  std::mt19937_64 rng_;
};

class NormalPredictor final : public Predictor {
 public:
  NormalPredictor(NormalModel model, std::uint64_t seed) : model_(model), rng_(seed) {}
  std::string_view name() const override { return "normal"; }
  PredictionOutcome predict(const PredictionTarget&) override { return normal_predict(model_, rng_); }

 private:
  NormalModel model_;
  std::mt19937_64 rng_;
};

class BaselinePredictor final : public Predictor {
 public:
  /// `train` and `model` must outlive the predictor.
  BaselinePredictor(const Dataset& train, const BaselineModel& model) : train_(train), model_(model) {}
  std::string_view name() const override { return "baseline"; }
  PredictionOutcome predict(const PredictionTarget& target) override;

 private:
  const Dataset& train_;
  const BaselineModel& model_;
};

/// KNN or BKNN over any user weight matrix (text, MSD, co-occurrence).
class NeighborPredictor final : public Predictor {
 public:
  /// References must outlive the predictor. `baseline` is required for BKNN.
  NeighborPredictor(std::string name, const Dataset& train, const TrainRatings& ratings,
                    const UserWeightMatrix& weights, std::size_t k_prime, const BaselineModel* baseline);
  std::string_view name() const override { return name_; }
  PredictionOutcome predict(const PredictionTarget& target) override;

 private:
  std::string name_;
  const Dataset& train_;
  const TrainRatings& ratings_;
  const UserWeightMatrix& weights_;
  std::size_t k_prime_;
  const BaselineModel* baseline_;
};

class SvdPredictor final : public Predictor {
 public:
  SvdPredictor(const Dataset& train, const MFModel& model) : train_(train), model_(model) {}
  std::string_view name() const override { return "svd"; }
  PredictionOutcome predict(const PredictionTarget& target) override;

 private:
  const Dataset& train_;
  const MFModel& model_;
};

/// Returns the true rating of a known (user, item, timestamp); used to test
/// the evaluation and selection plumbing. Unknown keys throw.
class OraclePredictor final : public Predictor {
 public:
  explicit OraclePredictor(std::span<const Interaction> truth);
  void add(std::span<const Interaction> truth);
  std::string_view name() const override { return "oracle"; }
  PredictionOutcome predict(const PredictionTarget& target) override;

 private:
  std::map<std::tuple<std::string, std::string, std::int64_t>, double> truth_;
};

// Dumps.

void write_baseline_json(const std::filesystem::path& path, const BaselineModel& model, const Dataset& train);
void write_svd_json(const std::filesystem::path& path, const MFModel& model, const Dataset& train);

struct PredictionRow {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  double estimate = 0.0;
  bool fallback_used = false;
};

/// TSV with header: user_id, item_id, rating, estimate, fallback, model.
void write_predictions_tsv(const std::filesystem::path& path, std::span<const PredictionRow> rows,
                           std::string_view model);

}  // namespace textknn

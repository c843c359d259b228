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

// Error and ranking metrics for rating prediction.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "textknn/corpus.hpp"
#include "textknn/predictors.hpp"

namespace textknn {

/// sqrt(mean((r - r_hat)^2)) over (r, r_hat) pairs. Throws on empty input.
double rmse(std::span<const std::pair<double, double>> pairs);

enum class PairClass { concordant, discordant, ignored };

std::string_view to_string(PairClass c);

/// Ignored when the truths are equal; a tie in the predictions of unequal
/// truths is discordant.
PairClass classify_pair(double r_a, double r_hat_a, double r_b, double r_hat_b);

struct UserConcordance {
  std::string user_id;
  std::size_t concordant = 0;
  std::size_t discordant = 0;

  friend bool operator==(const UserConcordance&, const UserConcordance&) = default;
};

struct EvalReport {
  std::size_t targets = 0;
  double rmse = 0.0;
  /// Mean of n_c / (n_c + n_d) over users with at least one counted pair;
  /// NaN when no user qualifies.
  double tfcp_macro = 0.0;
  /// Users in order of their first target.
  std::vector<UserConcordance> per_user;
  std::size_t users_excluded = 0;
  std::size_t fallbacks = 0;
  double fallback_rate = 0.0;
  /// Same macro average over pairs of test targets of one user, for users
  /// with at least two targets.
  std::optional<double> pair_fcp;
  /// Target predictions in target order.
  std::vector<PredictionRow> predictions;
};

/// Predicts every target, then every train interaction of each target's
/// user (users in order of first target, history order), and scores:
/// rmse over the targets, time-based FCP pairing each target with each of
/// the user's train interactions.
EvalReport evaluate(std::span<const Interaction> targets, const Dataset& train, Predictor& predictor);

/// Time-based FCP from precomputed predictions, one user per entry:
/// target_pairs[k] is the user's (r, r_hat) test pair and train_pairs[k]
/// the (r, r_hat) pairs of their train interactions.
double tfcp_macro(std::span<const std::pair<double, double>> target_pairs,
                  std::span<const std::vector<std::pair<double, double>>> train_pairs,
                  std::size_t* users_excluded = nullptr);

struct RankCorrelation {
  double spearman_rho = 0.0;
  double kendall_tau = 0.0;
};

/// Spearman (average ranks) and Kendall tau-b of two score maps over the same
/// model set. Throws Error("invalid_argument") for mismatched sets or fewer
/// than 2 models. A constant score list gives NaN.
RankCorrelation rank_correlation(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

}  // namespace textknn

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

#include "textknn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

namespace textknn {
namespace {

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

struct Counts {
  std::size_t concordant = 0;
  std::size_t discordant = 0;

  void add(PairClass c) {
    if (c == PairClass::concordant) ++concordant;
    if (c == PairClass::discordant) ++discordant;
  }
};

// Mean of per-user concordant fractions; users without counted pairs are
// excluded and counted.
double macro_average(std::span<const Counts> users, std::size_t* excluded) {
  double sum = 0.0;
  std::size_t included = 0;
  std::size_t skipped = 0;
  for (const auto& c : users) {
    const std::size_t n = c.concordant + c.discordant;
    if (n == 0) {
      ++skipped;
      continue;
    }
    sum += static_cast<double>(c.concordant) / static_cast<double>(n);
    ++included;
  }
  if (excluded) *excluded = skipped;
  return included == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(included);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() && x[order[hi + 1]] == x[order[lo]]) ++hi;
    const double r = (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0 + 1.0;
    for (std::size_t k = lo; k <= hi; ++k) ranks[order[k]] = r;
    lo = hi + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double rmse(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw Error("invalid_argument", "rmse of an empty prediction list");
  double sq = 0.0;
  for (const auto& [r, r_hat] : pairs) sq += (r - r_hat) * (r - r_hat);
  return std::sqrt(sq / static_cast<double>(pairs.size()));
}

std::string_view to_string(PairClass c) {
  switch (c) {
    case PairClass::concordant:
      return "concordant";
    case PairClass::discordant:
      return "discordant";
    case PairClass::ignored:
      return "ignored";
  }
  return "?";
}

PairClass classify_pair(double r_a, double r_hat_a, double r_b, double r_hat_b) {
  if (r_a == r_b) return PairClass::ignored;
  return sgn(r_a - r_b) == sgn(r_hat_a - r_hat_b) ? PairClass::concordant : PairClass::discordant;
}

double tfcp_macro(std::span<const std::pair<double, double>> target_pairs,
                  std::span<const std::vector<std::pair<double, double>>> train_pairs, std::size_t* users_excluded) {
  if (target_pairs.size() != train_pairs.size()) throw Error("invalid_argument", "one train list per target expected");
  std::vector<Counts> users(target_pairs.size());
  for (std::size_t k = 0; k < target_pairs.size(); ++k) {
    const auto [r, r_hat] = target_pairs[k];
    for (const auto& [t, t_hat] : train_pairs[k]) users[k].add(classify_pair(r, r_hat, t, t_hat));
  }
  return macro_average(users, users_excluded);
}

EvalReport evaluate(std::span<const Interaction> targets, const Dataset& train, Predictor& predictor) {
  EvalReport report;
  report.targets = targets.size();
  if (targets.empty()) throw Error("invalid_argument", "nothing to evaluate");

  std::vector<std::pair<double, double>> target_pairs;
  target_pairs.reserve(targets.size());
  for (const auto& t : targets) {
    auto out = predictor.predict({t.user_id, t.item_id, t.timestamp});
    target_pairs.emplace_back(t.rating, out.estimate);
    report.predictions.push_back({t.user_id, t.item_id, t.rating, out.estimate, out.fallback_used});
    if (out.fallback_used) ++report.fallbacks;
  }
  report.rmse = rmse(target_pairs);
  report.fallback_rate = static_cast<double>(report.fallbacks) / static_cast<double>(targets.size());

  // Group targets by user, first-appearance order.
  std::unordered_map<std::string, std::size_t> slot_of;
  std::vector<std::vector<std::size_t>> by_user;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto [it, fresh] = slot_of.try_emplace(targets[k].user_id, by_user.size());
    if (fresh) {
      by_user.emplace_back();
      report.per_user.push_back({targets[k].user_id, 0, 0});
    }
    by_user[it->second].push_back(k);
  }

  std::vector<Counts> counts(by_user.size());
  std::vector<Counts> pair_counts(by_user.size());
  std::size_t multi_target_users = 0;
  for (std::size_t slot = 0; slot < by_user.size(); ++slot) {
    const auto& ks = by_user[slot];
    std::vector<std::pair<double, double>> train_pairs;
    if (auto u = train.find_user(report.per_user[slot].user_id)) {
      for (auto pos : train.user_history(*u)) {
        const auto& x = train.at(pos);
        train_pairs.emplace_back(x.rating, predictor.predict({x.user_id, x.item_id, x.timestamp}).estimate);
      }
    }
    for (auto k : ks) {
      for (const auto& [t, t_hat] : train_pairs) {
        counts[slot].add(classify_pair(target_pairs[k].first, target_pairs[k].second, t, t_hat));
      }
    }
    if (ks.size() >= 2) {
      ++multi_target_users;
      for (std::size_t a = 0; a < ks.size(); ++a) {
        for (std::size_t b = a + 1; b < ks.size(); ++b) {
          pair_counts[slot].add(classify_pair(target_pairs[ks[a]].first, target_pairs[ks[a]].second,
                                              target_pairs[ks[b]].first, target_pairs[ks[b]].second));
        }
      }
    }
    report.per_user[slot].concordant = counts[slot].concordant;
    report.per_user[slot].discordant = counts[slot].discordant;
  }
  report.tfcp_macro = macro_average(counts, &report.users_excluded);
  if (multi_target_users > 0) {
    std::vector<Counts> multi;
    for (std::size_t slot = 0; slot < by_user.size(); ++slot) {
      if (by_user[slot].size() >= 2) multi.push_back(pair_counts[slot]);
    }
    const double v = macro_average(multi, nullptr);
    if (!std::isnan(v)) report.pair_fcp = v;
  }
  return report;
}

RankCorrelation rank_correlation(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  if (a.size() != b.size()) throw Error("invalid_argument", "rank correlation needs the same model set on both sides");
  if (a.size() < 2) throw Error("invalid_argument", "rank correlation needs at least 2 models");
  std::vector<double> xa;
  std::vector<double> xb;
  for (const auto& [name, score] : a) {
    auto it = b.find(name);
    if (it == b.end()) throw Error("invalid_argument", fmt::format("model '{}' missing from the second ranking", name));
    xa.push_back(score);
    xb.push_back(it->second);
  }
  RankCorrelation out;
  out.spearman_rho = pearson(average_ranks(xa), average_ranks(xb));

  long long concordant = 0;
  long long discordant = 0;
  long long ties_a = 0;
  long long ties_b = 0;
  long long pairs = 0;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    for (std::size_t j = i + 1; j < xa.size(); ++j) {
      ++pairs;
      const int da = sgn(xa[i] - xa[j]);
      const int db = sgn(xb[i] - xb[j]);
      if (da == 0) ++ties_a;
      if (db == 0) ++ties_b;
      if (da == 0 || db == 0) continue;
      (da == db ? concordant : discordant) += 1;
    }
  }
  const double denom = std::sqrt(static_cast<double>(pairs - ties_a) * static_cast<double>(pairs - ties_b));
  out.kendall_tau = denom == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                 : static_cast<double>(concordant - discordant) / denom;
  return out;
}

}  // namespace textknn

// Copyright 2026 The stgloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Temporal IoU, recall at tIoU thresholds, mIoU and the random-segment
// baseline. Percentages are in [0, 100].

#ifndef STGLOC_EVAL_METRICS_HPP_
#define STGLOC_EVAL_METRICS_HPP_

#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace stg {

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
  bool degenerate() const { return end_s < start_s; }
};

/// |a ∩ b| / |a ∪ b|. Two identical zero-length intervals score 1.
double tiou(const Interval& a, const Interval& b);

struct PredictionPair {
  Interval pred;
  Interval gt;
};

inline const std::vector<double>& default_alphas() {
  static const std::vector<double> kAlphas = {0.3, 0.5, 0.7, 0.9};
  return kAlphas;
}

/// tIoU of one pair. A degenerate prediction (end < start) scores zero unless
/// `swap_degenerate` is set, in which case its endpoints are swapped first.
double pair_tiou(const PredictionPair& pair, bool swap_degenerate = false);

std::vector<double> pair_tious(std::span<const PredictionPair> pairs, bool swap_degenerate = false);

/// alpha -> 100 * fraction of pairs with tIoU strictly greater than alpha.
std::map<double, double> recall_at(std::span<const PredictionPair> pairs, std::span<const double> alphas,
                                   bool swap_degenerate = false);

/// 100 * mean tIoU.
double miou(std::span<const PredictionPair> pairs, bool swap_degenerate = false);

struct EvalReport {
  std::map<double, double> recall_at;
  double miou = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_degenerate = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_table() const;
};

EvalReport evaluate_pairs(std::span<const PredictionPair> pairs, std::span<const double> alphas,
                          bool swap_degenerate = false);

/// Per-pair tIoU as CSV: index,pred_start_s,pred_end_s,gt_start_s,gt_end_s,tiou.
std::string tiou_csv(std::span<const PredictionPair> pairs, bool swap_degenerate = false);

struct GroundTruth {
  Interval moment;
  double duration_s = 0.0;
};

/// Scores two uniform draws in [0, duration] (ordered) against each moment.
EvalReport random_baseline(std::span<const GroundTruth> gts, std::mt19937_64& rng, std::span<const double> alphas);

}  // namespace stg

#endif  // STGLOC_EVAL_METRICS_HPP_

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

#include "stgloc/eval_metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "stgloc/errors.hpp"

namespace stg {

double tiou(const Interval& a, const Interval& b) {
  const double inter = std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
  const double uni = std::max(a.end_s, b.end_s) - std::min(a.start_s, b.start_s);
  if (uni <= 0.0) return a.start_s == b.start_s && a.end_s == b.end_s ? 1.0 : 0.0;
  return inter / uni;
}

double pair_tiou(const PredictionPair& pair, bool swap_degenerate) {
  Interval pred = pair.pred;
  if (pred.degenerate()) {
    if (!swap_degenerate) return 0.0;
    std::swap(pred.start_s, pred.end_s);
  }
  return tiou(pred, pair.gt);
}

std::vector<double> pair_tious(std::span<const PredictionPair> pairs, bool swap_degenerate) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(pair_tiou(p, swap_degenerate));
  return out;
}

std::map<double, double> recall_at(std::span<const PredictionPair> pairs, std::span<const double> alphas,
                                   bool swap_degenerate) {
  if (pairs.empty()) throw InputError("recall_at: no prediction pairs");
  const std::vector<double> ious = pair_tious(pairs, swap_degenerate);
  std::map<double, double> out;
  for (double alpha : alphas) {
    const auto hits = std::count_if(ious.begin(), ious.end(), [alpha](double v) { return v > alpha; });
    out[alpha] = 100.0 * static_cast<double>(hits) / static_cast<double>(ious.size());
  }
  return out;
}

double miou(std::span<const PredictionPair> pairs, bool swap_degenerate) {
  if (pairs.empty()) throw InputError("miou: no prediction pairs");
  double total = 0.0;
  for (const auto& p : pairs) total += pair_tiou(p, swap_degenerate);
  return 100.0 * total / static_cast<double>(pairs.size());
}

EvalReport evaluate_pairs(std::span<const PredictionPair> pairs, std::span<const double> alphas,
                          bool swap_degenerate) {
  EvalReport r;
  r.recall_at = recall_at(pairs, alphas, swap_degenerate);
  r.miou = miou(pairs, swap_degenerate);
  r.n_samples = pairs.size();
  r.n_degenerate = static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const PredictionPair& p) { return p.pred.degenerate(); }));
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [alpha, value] : recall_at) {
    char key[32];
    std::snprintf(key, sizeof(key), "%g", alpha);
    recall[key] = value;
  }
  return {{"recall_at", recall}, {"miou", miou}, {"n_samples", n_samples}, {"n_degenerate", n_degenerate}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  for (const auto& [key, value] : j.at("recall_at").items()) r.recall_at[std::stod(key)] = value.get<double>();
  r.miou = j.at("miou").get<double>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.n_degenerate = j.at("n_degenerate").get<std::size_t>();
  return r;
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char buf[64];
  for (const auto& [alpha, value] : recall_at) {
    std::snprintf(buf, sizeof(buf), "R@%-5g %8.2f\n", alpha, value);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "mIoU    %8.2f\n", miou);
  os << buf << "samples " << n_samples << " (degenerate " << n_degenerate << ")\n";
  return os.str();
}

std::string tiou_csv(std::span<const PredictionPair> pairs, bool swap_degenerate) {
  std::ostringstream os;
  os << "index,pred_start_s,pred_end_s,gt_start_s,gt_end_s,tiou\n";
  os.precision(17);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    os << i << ',' << p.pred.start_s << ',' << p.pred.end_s << ',' << p.gt.start_s << ',' << p.gt.end_s << ','
       << pair_tiou(p, swap_degenerate) << '\n';
  }
  return os.str();
}

EvalReport random_baseline(std::span<const GroundTruth> gts, std::mt19937_64& rng, std::span<const double> alphas) {
  std::vector<PredictionPair> pairs;
  pairs.reserve(gts.size());
  for (const GroundTruth& g : gts) {
    std::uniform_real_distribution<double> u(0.0, g.duration_s);
    double a = g.duration_s > 0.0 ? u(rng) : 0.0;
    double b = g.duration_s > 0.0 ? u(rng) : 0.0;
    if (b < a) std::swap(a, b);
    pairs.push_back({{a, b}, g.moment});
  }
  return evaluate_pairs(pairs, alphas);
}

}  // namespace stg

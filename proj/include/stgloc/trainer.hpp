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

// Training loop, evaluation, gradient checking and ablation sweeps.

#ifndef STGLOC_TRAINER_HPP_
#define STGLOC_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "stgloc/config.hpp"
#include "stgloc/eval_metrics.hpp"
#include "stgloc/model.hpp"

namespace stg {

struct EpochLog {
  int epoch = 0;  // 1-based
  double total_loss = 0.0;
  double kl_loss = 0.0;
  double spatial_loss = 0.0;
  double train_miou = 0.0;
  double val_miou = 0.0;
  bool evaluated = false;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;  // 0: the initial parameters were kept
  double best_val_miou = 0.0;
  double best_train_miou = 0.0;

  nlohmann::json to_json() const;
  /// epoch,total,kl,spatial,train_miou,val_miou,wall_seconds
  std::string to_csv() const;
};

/// Equal in every field except wall time.
bool same_trajectory(const TrainLog& a, const TrainLog& b);

struct TrainOptions {
  int epochs = 30;
  int batch_size = 6;
  int eval_every = 1;
  LossOptions loss;
  AdamOptions optimizer;
  std::uint64_t seed = 0;
  std::string checkpoint_path;  // empty: keep the best parameters in memory only
  std::function<void(const EpochLog&)> on_epoch;
};

TrainOptions train_options(const RunConfig& config);

/// Mini-batch Adam on the summed per-sample loss. Every eval_every epochs
/// both splits are scored in eval mode; the parameters with the best val mIoU
/// (train mIoU when there is no val split) are checkpointed and restored into
/// `model` at the end. Throws TrainingError naming the epoch and step when a
/// loss or gradient stops being finite.
TrainLog train(MomentLocalizer& model, const std::vector<AnnotatedSample>& train_set,
               const std::vector<AnnotatedSample>& val_set, const TrainOptions& options);

struct PredictionRecord {
  std::string video_id;
  std::string query;
  Interval pred;
  Interval gt;
  double tiou = 0.0;
};

struct Evaluation {
  EvalReport report;
  std::vector<PredictionRecord> predictions;
};

Evaluation evaluate(const MomentLocalizer& model, const std::vector<AnnotatedSample>& samples,
                    std::span<const double> alphas, bool swap_degenerate = false);

/// One JSON object per line: video_id, query, pred_start_s, pred_end_s,
/// gt_start_s, gt_end_s, tiou.
std::string predictions_jsonl(const std::vector<PredictionRecord>& predictions);

/// Loads the splits named by the config paths.
Dataset load_run_data(const RunConfig& config);

std::unique_ptr<MomentLocalizer> build_model(const RunConfig& config, const Dataset& data);

/// Rebuilds the model around `<checkpoint>.vocab` and loads the checkpoint.
std::unique_ptr<MomentLocalizer> load_model(const RunConfig& config, const std::string& checkpoint);

void save_model(const MomentLocalizer& model, const std::string& checkpoint);

struct GradcheckOptions {
  GraphVariant variant = GraphVariant::full;
  int iterations = 2;
  Index steps = 4;
  int humans = 2;
  int objects = 3;
  Index latent = 8;
  Index hidden = 4;
  Index word_dim = 6;
  Index activity_dim = 5;
  Index detection_dim = 5;
  double dropout = 0.5;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  // Test hook: runs on the analytic gradients before they are compared.
  std::function<void(ParameterSet&)> corrupt_gradients;
};

struct BlockCheck {
  std::string name;
  std::size_t entries = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;  // max |analytic - numeric| / max(|analytic|_inf, |numeric|_inf, 1e-4)
  bool passed = false;
};

struct GradcheckReport {
  std::vector<BlockCheck> blocks;
  bool passed = false;
  double seconds = 0.0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Central finite differences against the analytic gradient of the total
/// loss on a tiny random instance, block by block. Dropout runs in training
/// mode with the same mask for every evaluation.
GradcheckReport gradcheck(const GradcheckOptions& options);

struct AblationRow {
  GraphVariant variant = GraphVariant::full;
  int iterations = 0;
  EvalReport report;
  int best_epoch = 0;
  double seconds = 0.0;
};

/// Trains the full variant for every N in config.ablate_iterations, then every
/// other variant (config.ablate_variants, or all of them) at graph.iterations,
/// each from the same seed, and scores the val split.
std::vector<AblationRow> ablate(const RunConfig& config, const Dataset& data,
                                const std::function<void(const AblationRow&)>& on_row = {});

/// variant,iterations,R@a...,mIoU,best_epoch
std::string ablation_csv(const std::vector<AblationRow>& rows, std::span<const double> alphas);

}  // namespace stg

#endif  // STGLOC_TRAINER_HPP_

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

// Run configuration: an INI file with sections, overridden by command-line
// flags. The resolved configuration is echoed into every report.
//
//   [model]     word_dim d_v d_o latent hidden dropout top_n
//   [graph]     variant iterations
//   [loss]      smoothing sigma_pos spatial
//   [optimizer] lr weight_decay beta1 beta2 eps
//   [train]     batch_size epochs seed eval_every
//   [data]      fps
//   [eval]      alphas split swap_degenerate
//   [synth]     n_samples val_fraction t_min t_max signal_strength noise_std
//               stride frames_per_window seed
//   [ablate]    iterations variants
//   [paths]     data annotations val_annotations features detections
//               categories embeddings checkpoint report predictions

#ifndef STGLOC_CONFIG_HPP_
#define STGLOC_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "stgloc/adam.hpp"
#include "stgloc/eval_metrics.hpp"
#include "stgloc/model.hpp"
#include "stgloc/synth_data.hpp"

namespace stg {

struct PathConfig {
  std::string data;  // directory written by `synth`; overrides the files below
  std::string annotations;
  std::string val_annotations;
  std::string features;
  std::string detections;
  std::string categories;
  std::string embeddings;
  std::string checkpoint = "model.ckpt";
  std::string report;
  std::string predictions;
};

struct RunConfig {
  ModelOptions model;
  int top_n = 15;
  double fps = 25.0;  // frame rate behind detection frame indices
  LossOptions loss;
  AdamOptions optimizer;
  int batch_size = 6;
  int epochs = 30;
  int eval_every = 1;
  std::uint64_t seed = 0;
  std::vector<double> alphas = default_alphas();
  std::string eval_split = "val";
  bool swap_degenerate = false;
  SyntheticSpec synth;
  std::vector<int> ablate_iterations = {0, 1, 2, 3, 4};
  std::vector<GraphVariant> ablate_variants;  // empty: every variant
  PathConfig paths;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Applies `key = value` pairs from INI text on top of `config`. Unknown
/// sections or keys and malformed values throw ConfigError.
void apply_ini(RunConfig& config, const std::string& text);
RunConfig load_config(const std::string& path);

/// Applies one "section.key" assignment; the same keys as the INI file.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

std::string to_ini(const RunConfig& config);
nlohmann::json to_json(const RunConfig& config);

}  // namespace stg

#endif  // STGLOC_CONFIG_HPP_

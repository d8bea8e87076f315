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

// The full localizer: query encoder, spatial graph and temporal head wired
// together, plus the per-sample training objective.

#ifndef STGLOC_MODEL_HPP_
#define STGLOC_MODEL_HPP_

#include <cstdint>
#include <memory>

#include "stgloc/losses.hpp"
#include "stgloc/spatial_graph.hpp"
#include "stgloc/synth_data.hpp"
#include "stgloc/temporal_graph.hpp"
#include "stgloc/text_encoder.hpp"

namespace stg {

struct ModelOptions {
  Index word_dim = 300;
  Index activity_dim = 1024;
  Index detection_dim = 2048;
  Index latent = 256;
  Index hidden = 256;
  double dropout = 0.5;
  GraphVariant variant = GraphVariant::full;
  int iterations = 3;

  /// Throws ConfigError on non-positive dims, N < 0 or dropout outside [0, 1).
  void validate() const;
};

struct LossOptions {
  TargetSmoothing smoothing = TargetSmoothing::onehot;
  double sigma_positions = 1.0;
  bool spatial = true;  // false drops the spatial term
};

struct SampleLoss {
  Tensor total;
  Tensor kl;
  Tensor spatial;
};

class MomentLocalizer {
 public:
  /// Parameters are created in a fixed order from an rng seeded with `seed`.
  MomentLocalizer(const ModelOptions& options, Vocabulary vocab, std::uint64_t seed);

  MomentLocalizer(const MomentLocalizer&) = delete;
  MomentLocalizer& operator=(const MomentLocalizer&) = delete;

  const ModelOptions& options() const { return options_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const SpatialGraph& spatial() const { return *spatial_; }

  /// Overwrites embedding rows of tokens present in `pretrained`.
  /// Returns the number of rows copied.
  std::size_t load_word_vectors(const PretrainedEmbeddings& pretrained);

  /// Throws DimensionError when the sample's features disagree with the model.
  TemporalOutput forward(const AnnotatedSample& sample, bool training, Rng* rng) const;

  /// Eval-mode forward and decode without recording a tape.
  MomentPrediction predict(const AnnotatedSample& sample) const;

 private:
  ModelOptions options_;
  Vocabulary vocab_;
  ParameterSet params_;
  TextEncoderParams text_;
  std::unique_ptr<SpatialGraph> spatial_;
  TemporalParams temporal_;
};

/// Vocabulary of every query token in `samples`, in first-seen order.
Vocabulary build_vocabulary(std::span<const AnnotatedSample> samples);

SampleLoss sample_loss(const TemporalOutput& output, const AnnotatedSample& sample, const LossOptions& options);

}  // namespace stg

#endif  // STGLOC_MODEL_HPP_

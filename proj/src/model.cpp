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

#include "stgloc/model.hpp"

#include <string>

#include "stgloc/errors.hpp"

namespace stg {

void ModelOptions::validate() const {
  if (word_dim < 1 || activity_dim < 1 || detection_dim < 1 || latent < 1 || hidden < 1) {
    throw ConfigError("model dims must all be >= 1");
  }
  if (iterations < 0) throw ConfigError("graph.iterations must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
}

MomentLocalizer::MomentLocalizer(const ModelOptions& options, Vocabulary vocab, std::uint64_t seed)
    : options_(options), vocab_(std::move(vocab)) {
  options_.validate();
  Rng rng(seed);
  text_ = make_text_encoder(params_, vocab_.size(), options_.word_dim, options_.hidden, rng);
  spatial_ = std::make_unique<SpatialGraph>(options_.variant, options_.iterations, options_.activity_dim,
                                            options_.detection_dim, 2 * options_.hidden, options_.latent, params_,
                                            rng);
  temporal_ = make_temporal_graph(params_, options_.latent, options_.hidden, options_.dropout, rng);
}

std::size_t MomentLocalizer::load_word_vectors(const PretrainedEmbeddings& pretrained) {
  if (pretrained.vectors.cols() != options_.word_dim) {
    throw DimensionError("word vectors have width " + std::to_string(pretrained.vectors.cols()) +
                         ", model expects " + std::to_string(options_.word_dim));
  }
  Matrix& table = text_.table.weights.mutable_value();
  std::size_t copied = 0;
  for (int i = 2; i < vocab_.size(); ++i) {
    const int j = pretrained.vocab.index(vocab_.token(i));
    if (j == Vocabulary::kUnk) continue;
    table.row(i) = pretrained.vectors.row(j);
    ++copied;
  }
  return copied;
}

TemporalOutput MomentLocalizer::forward(const AnnotatedSample& sample, bool training, Rng* rng) const {
  const VideoData& video = *sample.video;
  if (video.features.features.cols() != options_.activity_dim) {
    throw DimensionError("video '" + sample.video_id + "' has activity dim " +
                         std::to_string(video.features.features.cols()) + ", model expects " +
                         std::to_string(options_.activity_dim));
  }
  const std::vector<int> ids = vocab_.encode(tokenize(sample.query));
  const QueryEncoding query = encode_query(ids, text_);
  const SceneObservations scene =
      stack_scene(video.features.features, video.frames, options_.variant, options_.detection_dim);
  const Tensor activity = spatial_->forward(scene, query);
  return temporal_forward(activity, temporal_, training, rng);
}

MomentPrediction MomentLocalizer::predict(const AnnotatedSample& sample) const {
  NoGradGuard guard;
  const TemporalOutput out = forward(sample, false, nullptr);
  return decode(out, sample.video->features.stride_seconds, sample.duration_s);
}

Vocabulary build_vocabulary(std::span<const AnnotatedSample> samples) {
  Vocabulary vocab;
  for (const AnnotatedSample& s : samples) {
    for (const std::string& tok : tokenize(s.query)) vocab.add(tok);
  }
  return vocab;
}

SampleLoss sample_loss(const TemporalOutput& output, const AnnotatedSample& sample, const LossOptions& options) {
  const Index steps = output.start_dist.rows();
  const MomentTarget target = build_targets(sample.t_start_s, sample.t_end_s, sample.video->features.stride_seconds,
                                            steps, options.smoothing, options.sigma_positions);
  SampleLoss loss;
  loss.kl = kl_loss(output.start_dist, output.end_dist, target);
  loss.spatial = options.spatial ? spatial_loss(output.spatial_dist, target.start_index, target.end_index)
                                 : Tensor::constant(Matrix::Zero(1, 1));
  loss.total = total_loss(loss.kl, loss.spatial);
  return loss;
}

}  // namespace stg

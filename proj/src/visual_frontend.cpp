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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stgloc/visual_frontend.hpp"

namespace stg {

void ActivityFeatures::validate() const {
  if (features.rows() < 1) throw InputError(video_id + ": activity features are empty");
  if (!(stride_seconds > 0.0)) throw InputError(video_id + ": stride_seconds must be positive");
  const double covered = static_cast<double>(features.rows()) * stride_seconds;
  if (std::abs(covered - duration_seconds) > stride_seconds + 1e-9) {
    throw InputError(video_id + ": " + std::to_string(features.rows()) + " features x " +
                     std::to_string(stride_seconds) + "s do not cover duration " +
                     std::to_string(duration_seconds) + "s to within one stride");
  }
}

NodeCategory CategoryMap::category(const std::string& label) const {
  auto it = labels_.find(label);
  return it == labels_.end() ? NodeCategory::object : it->second;
}

FrameObservations categorize_detections(std::span<const Detection> detections, const CategoryMap& categories,
                                        int top_n, Index feature_dim) {
  if (top_n < 1) throw InputError("categorize_detections: top_n must be at least 1");
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  order.resize(std::min(order.size(), static_cast<std::size_t>(top_n)));

  std::vector<std::size_t> humans;
  std::vector<std::size_t> objects;
  for (std::size_t i : order) {
    const Detection& d = detections[i];
    if (d.feature.size() != feature_dim) {
      throw InputError("detection '" + d.label + "' has feature size " + std::to_string(d.feature.size()) +
                       ", expected " + std::to_string(feature_dim));
    }
    (categories.category(d.label) == NodeCategory::human ? humans : objects).push_back(i);
  }
  FrameObservations obs;
  obs.humans.resize(static_cast<Index>(humans.size()), feature_dim);
  obs.objects.resize(static_cast<Index>(objects.size()), feature_dim);
  for (std::size_t r = 0; r < humans.size(); ++r) {
    obs.humans.row(static_cast<Index>(r)) = detections[humans[r]].feature.transpose();
    obs.human_labels.push_back(detections[humans[r]].label);
  }
  for (std::size_t r = 0; r < objects.size(); ++r) {
    obs.objects.row(static_cast<Index>(r)) = detections[objects[r]].feature.transpose();
    obs.object_labels.push_back(detections[objects[r]].label);
  }
  return obs;
}

NodeEmbeddingParams make_node_embeddings(ParameterSet& params, Index activity_dim, Index detection_dim,
                                         Index latent, Rng& rng) {
  return {make_affine(params, "embed.activity", activity_dim, latent, rng),
          make_affine(params, "embed.human", detection_dim, latent, rng),
          make_affine(params, "embed.object", detection_dim, latent, rng)};
}

EmbeddedNodes embed_nodes(const Matrix& activity, const Matrix& humans, const Matrix& objects,
                          const NodeEmbeddingParams& params) {
  return {tanh(params.activity(Tensor::constant(activity))), tanh(params.human(Tensor::constant(humans))),
          tanh(params.object(Tensor::constant(objects)))};
}

}  // namespace stg

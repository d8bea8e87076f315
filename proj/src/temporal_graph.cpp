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

#include "stgloc/temporal_graph.hpp"

#include <algorithm>

#include "stgloc/errors.hpp"

namespace stg {

TemporalParams make_temporal_graph(ParameterSet& params, Index latent, Index hidden, double dropout, Rng& rng) {
  TemporalParams p;
  p.gru = make_bigru(params, "temporal.gru", latent, hidden, 2, rng);
  p.start_head = make_affine(params, "temporal.start", 2 * hidden, 1, rng);
  p.end_head = make_affine(params, "temporal.end", 2 * hidden, 1, rng);
  p.spatial_head = make_affine(params, "temporal.spatial", latent, 1, rng);
  p.dropout = dropout;
  return p;
}

TemporalOutput temporal_forward(const Tensor& activity, const TemporalParams& params, bool training, Rng* rng) {
  if (activity.rows() < 1) throw InputError("temporal_forward: empty activity sequence");
  const Tensor contexts = bigru_forward(activity, params.gru, params.dropout, rng, training);
  return {softmax(params.start_head(contexts), 0), softmax(params.end_head(contexts), 0),
          softmax(params.spatial_head(activity), 0)};
}

Index argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw InputError("argmax of an empty vector");
  return static_cast<Index>(std::max_element(values.begin(), values.end()) - values.begin());
}

MomentPrediction decode(const TemporalOutput& output, double stride_seconds, double duration_seconds) {
  MomentPrediction p;
  p.start_dist = output.start_dist.value().col(0);
  p.end_dist = output.end_dist.value().col(0);
  p.spatial_scores = output.spatial_dist.value().col(0);
  p.start_index = argmax_lowest({p.start_dist.data(), static_cast<std::size_t>(p.start_dist.size())});
  p.end_index = argmax_lowest({p.end_dist.data(), static_cast<std::size_t>(p.end_dist.size())});
  p.start_seconds = std::min(static_cast<double>(p.start_index) * stride_seconds, duration_seconds);
  p.end_seconds = std::min(static_cast<double>(p.end_index + 1) * stride_seconds, duration_seconds);
  return p;
}

}  // namespace stg

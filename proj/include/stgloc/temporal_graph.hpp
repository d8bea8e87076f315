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

// Temporal stage: a two-layer bidirectional GRU over the contextualized
// activity sequence, start/end heads with a softmax over time, the spatial
// score head y = softmax(g(a)), and argmax decoding back to seconds.

#ifndef STGLOC_TEMPORAL_GRAPH_HPP_
#define STGLOC_TEMPORAL_GRAPH_HPP_

#include <Eigen/Core>

#include <span>

#include "stgloc/gru.hpp"
#include "stgloc/parameters.hpp"

namespace stg {

struct TemporalParams {
  GruParams gru;
  Affine start_head;    // 2 hidden -> 1
  Affine end_head;      // 2 hidden -> 1
  Affine spatial_head;  // latent -> 1
  double dropout = 0.5;
};

TemporalParams make_temporal_graph(ParameterSet& params, Index latent, Index hidden, double dropout, Rng& rng);

/// Distributions are t x 1 columns.
struct TemporalOutput {
  Tensor start_dist;
  Tensor end_dist;
  Tensor spatial_dist;
};

/// Dropout between the GRU layers is active only when `training` is set, in
/// which case `rng` must be non-null.
TemporalOutput temporal_forward(const Tensor& activity, const TemporalParams& params, bool training,
                                Rng* rng = nullptr);

struct MomentPrediction {
  Eigen::VectorXd start_dist;
  Eigen::VectorXd end_dist;
  Eigen::VectorXd spatial_scores;
  Index start_index = 0;
  Index end_index = 0;
  double start_seconds = 0.0;
  double end_seconds = 0.0;

  /// End before start; reported as-is.
  bool degenerate() const { return end_seconds < start_seconds; }
};

/// First index of the maximum.
Index argmax_lowest(std::span<const double> values);

/// start = index * stride, end = (index + 1) * stride, both clamped to the
/// duration. Start and end are decoded independently.
MomentPrediction decode(const TemporalOutput& output, double stride_seconds, double duration_seconds);

}  // namespace stg

#endif  // STGLOC_TEMPORAL_GRAPH_HPP_

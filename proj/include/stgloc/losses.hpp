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

// Training objective: KL divergence between predicted and target start/end
// distributions (prediction first) plus the spatial penalty
// -sum_{i outside [s, e]} log(1 - y_i).

#ifndef STGLOC_LOSSES_HPP_
#define STGLOC_LOSSES_HPP_

#include <string>
#include <string_view>

#include "stgloc/tensor.hpp"

namespace stg {

enum class TargetSmoothing { onehot, gaussian };

std::string to_string(TargetSmoothing smoothing);
TargetSmoothing parse_target_smoothing(std::string_view name);

struct MomentTarget {
  Index start_index = 0;
  Index end_index = 0;
  Matrix start_dist;  // t x 1
  Matrix end_dist;    // t x 1
};

/// Feature-domain indices of a moment: the window containing the start time,
/// and the window containing the last instant before the end time.
Index start_position(double seconds, double stride_seconds, Index steps);
Index end_position(double seconds, double stride_seconds, Index steps);

/// Throws InputError for negative or inverted times.
MomentTarget build_targets(double start_seconds, double end_seconds, double stride_seconds, Index steps,
                           TargetSmoothing smoothing = TargetSmoothing::onehot, double sigma_positions = 1.0);

inline constexpr double kProbabilityFloor = 1e-12;

/// D_KL(pred_start || target_start) + D_KL(pred_end || target_end).
Tensor kl_loss(const Tensor& pred_start, const Tensor& pred_end, const MomentTarget& target);

/// Throws ContractError unless 0 <= start <= end < length(y).
Tensor spatial_loss(const Tensor& y, Index start_index, Index end_index);

/// Unweighted sum; throws TrainingError if either term is not finite.
Tensor total_loss(const Tensor& kl, const Tensor& spatial);

}  // namespace stg

#endif  // STGLOC_LOSSES_HPP_

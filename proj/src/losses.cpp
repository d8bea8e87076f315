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

#include "stgloc/losses.hpp"

#include <algorithm>
#include <cmath>

#include "stgloc/errors.hpp"

namespace stg {

namespace {

// Window boundaries computed as index * stride may land a rounding error to
// either side of the exact multiple.
constexpr double kBoundarySlack = 1e-9;

Matrix target_distribution(Index center, Index steps, TargetSmoothing smoothing, double sigma) {
  Matrix d = Matrix::Zero(steps, 1);
  if (smoothing == TargetSmoothing::onehot) {
    d(center, 0) = 1.0;
    return d;
  }
  for (Index i = 0; i < steps; ++i) {
    const double delta = static_cast<double>(i - center);
    d(i, 0) = std::exp(-delta * delta / (2.0 * sigma * sigma));
  }
  return d / d.sum();
}

}  // namespace

std::string to_string(TargetSmoothing smoothing) {
  return smoothing == TargetSmoothing::onehot ? "onehot" : "gaussian";
}

TargetSmoothing parse_target_smoothing(std::string_view name) {
  if (name == "onehot") return TargetSmoothing::onehot;
  if (name == "gaussian") return TargetSmoothing::gaussian;
  throw ConfigError("unknown loss.smoothing '" + std::string(name) + "'");
}

Index start_position(double seconds, double stride_seconds, Index steps) {
  const auto i = static_cast<Index>(std::floor(seconds / stride_seconds + kBoundarySlack));
  return std::clamp<Index>(i, 0, steps - 1);
}

Index end_position(double seconds, double stride_seconds, Index steps) {
  const auto i = static_cast<Index>(std::ceil(seconds / stride_seconds - kBoundarySlack)) - 1;
  return std::clamp<Index>(i, 0, steps - 1);
}

MomentTarget build_targets(double start_seconds, double end_seconds, double stride_seconds, Index steps,
                           TargetSmoothing smoothing, double sigma_positions) {
  if (steps < 1) throw InputError("build_targets: no feature positions");
  if (!(stride_seconds > 0.0)) throw InputError("build_targets: stride must be positive");
  if (start_seconds < 0.0 || end_seconds < start_seconds) {
    throw InputError("build_targets: invalid moment [" + std::to_string(start_seconds) + ", " +
                     std::to_string(end_seconds) + "]");
  }
  if (smoothing == TargetSmoothing::gaussian && !(sigma_positions > 0.0)) {
    throw ConfigError("loss.sigma_pos must be positive");
  }
  MomentTarget t;
  t.start_index = start_position(start_seconds, stride_seconds, steps);
  t.end_index = std::max(t.start_index, end_position(end_seconds, stride_seconds, steps));
  t.start_dist = target_distribution(t.start_index, steps, smoothing, sigma_positions);
  t.end_dist = target_distribution(t.end_index, steps, smoothing, sigma_positions);
  return t;
}

Tensor kl_loss(const Tensor& pred_start, const Tensor& pred_end, const MomentTarget& target) {
  return kl_divergence(pred_start, target.start_dist, kProbabilityFloor) +
         kl_divergence(pred_end, target.end_dist, kProbabilityFloor);
}

Tensor spatial_loss(const Tensor& y, Index start_index, Index end_index) {
  const Index t = y.size();
  if (start_index < 0 || end_index < start_index || end_index >= t) {
    throw ContractError("spatial_loss: span [" + std::to_string(start_index) + ", " + std::to_string(end_index) +
                        "] outside 0.." + std::to_string(t - 1));
  }
  Matrix outside = Matrix::Ones(y.rows(), y.cols());
  for (Index i = start_index; i <= end_index; ++i) outside.data()[i] = 0.0;
  return -sum(hadamard(log_floor(scale_shift(y, -1.0, 1.0), kProbabilityFloor), Tensor::constant(outside)));
}

Tensor total_loss(const Tensor& kl, const Tensor& spatial) {
  if (!std::isfinite(kl.item()) || !std::isfinite(spatial.item())) {
    throw TrainingError("non-finite loss (kl " + std::to_string(kl.item()) + ", spatial " +
                        std::to_string(spatial.item()) + ")");
  }
  return kl + spatial;
}

}  // namespace stg

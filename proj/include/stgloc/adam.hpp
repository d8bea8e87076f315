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

#ifndef STGLOC_ADAM_HPP_
#define STGLOC_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "stgloc/parameters.hpp"

namespace stg {

struct AdamOptions {
  double learning_rate = 1e-4;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers aligned with the entries of one ParameterSet.
class AdamState {
 public:
  AdamState(const ParameterSet& params, AdamOptions options);

  const AdamOptions& options() const { return options_; }
  std::int64_t step() const { return step_; }
  const Matrix& first_moment(std::size_t i) const { return m_[i]; }
  const Matrix& second_moment(std::size_t i) const { return v_[i]; }

 private:
  friend void adam_step(ParameterSet& params, AdamState& state);

  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

// Decoupled weight decay (p -= lr * wd * p) followed by the bias-corrected
// Adam update from the accumulated gradients. Throws TrainingError naming
// the parameter if any gradient entry is not finite.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace stg

#endif  // STGLOC_ADAM_HPP_

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

#include "stgloc/adam.hpp"

#include <cmath>

#include "stgloc/errors.hpp"

namespace stg {

AdamState::AdamState(const ParameterSet& params, AdamOptions options) : options_(options) {
  for (const auto& [name, t] : params.entries()) {
    m_.push_back(Matrix::Zero(t.rows(), t.cols()));
    v_.push_back(Matrix::Zero(t.rows(), t.cols()));
  }
}

void adam_step(ParameterSet& params, AdamState& state) {
  if (params.size() != state.m_.size()) {
    throw ContractError("adam_step: state tracks " + std::to_string(state.m_.size()) +
                        " parameters, set has " + std::to_string(params.size()));
  }
  for (const auto& [name, t] : params.entries()) {
    if (t.has_grad() && !t.grad().allFinite()) {
      throw TrainingError("non-finite gradient in parameter '" + name + "'");
    }
  }
  const AdamOptions& o = state.options_;
  ++state.step_;
  const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step_));
  const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step_));

  std::size_t i = 0;
  for (const auto& entry : params.entries()) {
    Tensor t = entry.second;
    Matrix& p = t.mutable_value();
    Matrix& m = state.m_[i];
    Matrix& v = state.v_[i];
    ++i;
    if (p.rows() != m.rows() || p.cols() != m.cols()) {
      throw ContractError("adam_step: moment shape mismatch for '" + entry.first + "'");
    }
    p -= o.learning_rate * o.weight_decay * p;
    if (!t.has_grad()) continue;
    const Matrix& g = t.grad();
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseAbs2();
    p.array() -= o.learning_rate * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + o.epsilon);
  }
}

}  // namespace stg

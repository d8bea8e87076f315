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

// Bidirectional GRU built from tensor primitives.
//
//   z  = sigmoid(x W_z + h U_z + b_z)
//   r  = sigmoid(x W_r + h U_r + b_r)
//   h~ = tanh(x W_h + (r * h) U_h + b_h)
//   h' = (1 - z) * h + z * h~
//
// with a zero initial state in both directions.

#ifndef STGLOC_GRU_HPP_
#define STGLOC_GRU_HPP_

#include <string>
#include <vector>

#include "stgloc/parameters.hpp"

namespace stg {

struct GruCellParams {
  Tensor w_z, u_z, b_z;
  Tensor w_r, u_r, b_r;
  Tensor w_h, u_h, b_h;

  Index input_dim() const { return w_z.rows(); }
  Index hidden() const { return u_z.rows(); }
};

struct BiGruLayerParams {
  GruCellParams forward;
  GruCellParams backward;
};

struct GruParams {
  std::vector<BiGruLayerParams> layers;

  Index hidden() const { return layers.front().forward.hidden(); }
  Index output_dim() const { return 2 * hidden(); }
};

GruCellParams make_gru_cell(ParameterSet& params, const std::string& prefix, Index input_dim, Index hidden,
                            Rng& rng);
GruParams make_bigru(ParameterSet& params, const std::string& prefix, Index input_dim, Index hidden,
                     int layers, Rng& rng);

/// Hidden states for every step of `x` (m x d_in), returned in input order
/// (m x hidden). `reverse` runs the recurrence from the last row.
Tensor gru_sequence(const Tensor& x, const GruCellParams& cell, bool reverse);

/// One bidirectional layer: [forward states ; backward states] per row.
Tensor bigru_layer(const Tensor& x, const BiGruLayerParams& layer);

/// Stacked bidirectional layers (m x 2 hidden). Dropout with `dropout_rate`
/// is applied between consecutive layers in training mode only.
Tensor bigru_forward(const Tensor& x, const GruParams& params, double dropout_rate = 0.0, Rng* rng = nullptr,
                     bool training = false);

}  // namespace stg

#endif  // STGLOC_GRU_HPP_

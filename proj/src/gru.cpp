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

#include "stgloc/gru.hpp"

#include "stgloc/errors.hpp"

namespace stg {

GruCellParams make_gru_cell(ParameterSet& params, const std::string& prefix, Index input_dim, Index hidden,
                            Rng& rng) {
  GruCellParams c;
  auto w = [&](const char* n) { return params.add(prefix + "." + n, xavier_uniform(input_dim, hidden, rng)); };
  auto u = [&](const char* n) { return params.add(prefix + "." + n, xavier_uniform(hidden, hidden, rng)); };
  auto b = [&](const char* n) { return params.add(prefix + "." + n, Matrix::Zero(1, hidden)); };
  c.w_z = w("w_z");
  c.u_z = u("u_z");
  c.b_z = b("b_z");
  c.w_r = w("w_r");
  c.u_r = u("u_r");
  c.b_r = b("b_r");
  c.w_h = w("w_h");
  c.u_h = u("u_h");
  c.b_h = b("b_h");
  return c;
}

GruParams make_bigru(ParameterSet& params, const std::string& prefix, Index input_dim, Index hidden,
                     int layers, Rng& rng) {
  GruParams g;
  Index in = input_dim;
  for (int l = 0; l < layers; ++l) {
    const std::string p = prefix + ".l" + std::to_string(l);
    g.layers.push_back({make_gru_cell(params, p + ".fwd", in, hidden, rng),
                        make_gru_cell(params, p + ".bwd", in, hidden, rng)});
    in = 2 * hidden;
  }
  return g;
}

Tensor gru_sequence(const Tensor& x, const GruCellParams& cell, bool reverse) {
  if (x.cols() != cell.input_dim()) {
    throw DimensionError("gru: input width " + std::to_string(x.cols()) + " does not match cell input " +
                         std::to_string(cell.input_dim()));
  }
  const Index m = x.rows();
  // Input projections for all steps at once.
  const Tensor xz = x * cell.w_z + cell.b_z;
  const Tensor xr = x * cell.w_r + cell.b_r;
  const Tensor xh = x * cell.w_h + cell.b_h;

  std::vector<Tensor> states(static_cast<std::size_t>(m));
  Tensor h = Tensor::zeros(1, cell.hidden());
  for (Index s = 0; s < m; ++s) {
    const Index i = reverse ? m - 1 - s : s;
    const Tensor z = sigmoid(row(xz, i) + h * cell.u_z);
    const Tensor r = sigmoid(row(xr, i) + h * cell.u_r);
    const Tensor candidate = tanh(row(xh, i) + hadamard(r, h) * cell.u_h);
    h = h + hadamard(z, candidate - h);
    states[static_cast<std::size_t>(i)] = h;
  }
  return concat_rows(states);
}

Tensor bigru_layer(const Tensor& x, const BiGruLayerParams& layer) {
  return concat_cols(gru_sequence(x, layer.forward, false), gru_sequence(x, layer.backward, true));
}

Tensor bigru_forward(const Tensor& x, const GruParams& params, double dropout_rate, Rng* rng, bool training) {
  if (x.rows() < 1) throw InputError("gru: empty input sequence");
  Tensor out = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (l > 0 && training && dropout_rate > 0.0) {
      if (rng == nullptr) throw ContractError("gru: training-mode dropout needs a random generator");
      out = dropout(out, dropout_rate, *rng, training);
    }
    out = bigru_layer(out, params.layers[l]);
  }
  return out;
}

}  // namespace stg

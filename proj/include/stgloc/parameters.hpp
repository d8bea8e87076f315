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

#ifndef STGLOC_PARAMETERS_HPP_
#define STGLOC_PARAMETERS_HPP_

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stgloc/tensor.hpp"

namespace stg {

/// Named, ordered collection of trainable leaves. Insertion order is the
/// checkpoint order and the optimizer order.
class ParameterSet {
 public:
  Tensor add(const std::string& name, Matrix init);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Uniform Glorot initialization for an in x out weight.
Matrix xavier_uniform(Index in, Index out, Rng& rng);

/// y = x W + b with W in x out and b a 1 x out row.
struct Affine {
  Tensor weight;
  Tensor bias;

  Tensor operator()(const Tensor& x) const { return matmul(x, weight) + bias; }
  Index in_dim() const { return weight.rows(); }
  Index out_dim() const { return weight.cols(); }
};

Affine make_affine(ParameterSet& params, const std::string& name, Index in, Index out, Rng& rng);

}  // namespace stg

#endif  // STGLOC_PARAMETERS_HPP_

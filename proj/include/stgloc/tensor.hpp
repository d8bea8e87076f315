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

// Dense 2-D tensors with reverse-mode automatic differentiation.
//
// Every operation on a tensor that requires a gradient records a node whose
// sequence number (its tape id) is strictly greater than the ids of its
// inputs. The creation order of nodes is therefore the gradient tape, and
// `backward` replays it by visiting reachable nodes in decreasing id order.
//
// All tensors are row-major matrices of doubles. Vectors are 1 x n rows unless
// stated otherwise; the per-timestep distributions of the temporal head are
// t x 1 columns.

#ifndef STGLOC_TENSOR_HPP_
#define STGLOC_TENSOR_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

namespace detail {
struct Node;
}

class Tensor {
 public:
  /// An empty 0 x 0 constant.
  Tensor();

  static Tensor constant(Matrix value);
  /// A leaf that accumulates gradients across `backward` calls.
  static Tensor parameter(Matrix value, std::string name = {});
  static Tensor zeros(Index rows, Index cols);

  Index rows() const;
  Index cols() const;
  Index size() const;
  std::vector<std::size_t> shape() const;

  const Matrix& value() const;
  /// Direct access for optimizers and finite-difference probes.
  Matrix& mutable_value();

  bool requires_grad() const;
  bool has_grad() const;
  const Matrix& grad() const;
  Matrix& mutable_grad();
  void zero_grad();

  std::uint64_t tape_id() const;
  const std::string& name() const;
  double item() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  explicit Tensor(std::shared_ptr<detail::Node> node);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables recording for the current thread while alive (evaluation mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise arithmetic. `b` may match `a` exactly, be a 1 x cols(a) row
// broadcast over rows, or be a 1 x 1 scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
/// scale * a + shift.
Tensor scale_shift(const Tensor& a, double scale, double shift = 0.0);

inline Tensor operator*(const Tensor& a, const Tensor& b) { return matmul(a, b); }
inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator-(const Tensor& a) { return scale_shift(a, -1.0); }

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// Natural log; throws DomainError on any non-positive entry.
Tensor log(const Tensor& a);
/// log(max(a, floor)); the gradient is zero where the floor is active.
Tensor log_floor(const Tensor& a, double floor);

// Shape manipulation.
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, Index start, Index count);
Tensor slice_cols(const Tensor& a, Index start, Index count);
inline Tensor row(const Tensor& a, Index i) { return slice_rows(a, i, 1); }
/// out.row(r) = a.row(index[r]).
Tensor gather_rows(const Tensor& a, std::span<const int> index);
/// Repeats a 1 x n row `count` times.
Tensor repeat_rows(const Tensor& a, Index count);
/// out.row(s) = sum of a.row(r) over r with segment[r] == s; empty segments are zero.
Tensor segment_sum(const Tensor& a, std::span<const int> segment, Index segments);

// Reductions. Axis 0 reduces over rows (1 x cols result), axis 1 over columns.
Tensor sum(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);
/// Max-subtracted softmax; every slice along `axis` sums to one.
Tensor softmax(const Tensor& a, int axis);

/// Inverted dropout: in training mode entries are zeroed with probability
/// `rate` and survivors scaled by 1 / (1 - rate). Identity otherwise.
Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training);

/// sum_i p_i * log(p_i / max(q_i, floor)) as a 1 x 1 tensor. `q` is a fixed
/// target; entries with p_i == 0 contribute zero.
Tensor kl_divergence(const Tensor& p, const Matrix& q, double floor = 1e-12);

/// Populates gradients of every requires-grad leaf reachable from the scalar
/// `loss`, accumulating into existing leaf buffers. Consumes the tape: the
/// interior nodes are released afterwards.
void backward(const Tensor& loss);

}  // namespace stg

#endif  // STGLOC_TENSOR_HPP_

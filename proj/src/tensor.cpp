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

#include "stgloc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "stgloc/errors.hpp"

namespace stg {
namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool consumed = false;
  std::uint64_t seq = 0;
  std::string name;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(const Matrix&)> backward;
};

}  // namespace detail

namespace {

using detail::Node;

thread_local std::uint64_t next_seq = 1;
thread_local bool recording = true;

std::shared_ptr<Node> new_node(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->seq = next_seq++;
  return node;
}

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << "[" << m.rows() << "x" << m.cols() << "]";
  return os.str();
}

void ensure_grad(Node& n) {
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
}

template <typename Derived>
void accumulate(Node& n, const Eigen::MatrixBase<Derived>& g) {
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

template <typename Derived>
void accumulate_block(Node& n, Index row, Index col, const Eigen::MatrixBase<Derived>& g) {
  if (!n.requires_grad) return;
  ensure_grad(n);
  n.grad.block(row, col, g.rows(), g.cols()) += g;
}

template <typename Fn>
Tensor result(Matrix value, std::initializer_list<const Tensor*> inputs, Fn&& fn) {
  auto node = new_node(std::move(value));
  if (recording) {
    bool any = false;
    for (const Tensor* t : inputs) any = any || t->requires_grad();
    if (any) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (const Tensor* t : inputs) node->inputs.push_back(t->node());
      node->backward = std::forward<Fn>(fn);
    }
  }
  return Tensor(std::move(node));
}

enum class Broadcast { same, row, scalar };

Broadcast broadcast_mode(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                       " do not broadcast");
}

Matrix expand(const Matrix& b, Index rows, Index cols, Broadcast mode) {
  switch (mode) {
    case Broadcast::same:
      return b;
    case Broadcast::row:
      return b.replicate(rows, 1);
    case Broadcast::scalar:
      return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

Matrix reduce(const Matrix& g, Broadcast mode) {
  switch (mode) {
    case Broadcast::same:
      return g;
    case Broadcast::row:
      return g.colwise().sum();
    case Broadcast::scalar:
      return Matrix::Constant(1, 1, g.sum());
  }
  return g;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_axis(int axis, const char* op) {
  if (axis != 0 && axis != 1) throw DimensionError(std::string(op) + ": axis must be 0 or 1");
}

}  // namespace

Tensor::Tensor() : node_(new_node(Matrix(0, 0))) {}

Tensor::Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

Tensor Tensor::constant(Matrix value) { return Tensor(new_node(std::move(value))); }

Tensor Tensor::parameter(Matrix value, std::string name) {
  auto node = new_node(std::move(value));
  node->requires_grad = true;
  node->name = std::move(name);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Index rows, Index cols) { return constant(Matrix::Zero(rows, cols)); }

Index Tensor::rows() const { return node_->value.rows(); }
Index Tensor::cols() const { return node_->value.cols(); }
Index Tensor::size() const { return node_->value.size(); }

std::vector<std::size_t> Tensor::shape() const {
  return {static_cast<std::size_t>(rows()), static_cast<std::size_t>(cols())};
}

const Matrix& Tensor::value() const { return node_->value; }
Matrix& Tensor::mutable_value() { return node_->value; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return node_->has_grad; }

const Matrix& Tensor::grad() const { return node_->grad; }

Matrix& Tensor::mutable_grad() {
  ensure_grad(*node_);
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad = Matrix::Zero(rows(), cols());
  node_->has_grad = true;
}

std::uint64_t Tensor::tape_id() const { return node_->seq; }
const std::string& Tensor::name() const { return node_->name; }

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw ContractError("item: tensor " + shape_str(value()) + " is not a scalar");
  }
  return node_->value(0, 0);
}

NoGradGuard::NoGradGuard() : previous_(recording) { recording = false; }
NoGradGuard::~NoGradGuard() { recording = previous_; }
bool grad_enabled() { return recording; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions of " + shape_str(a.value()) + " and " +
                         shape_str(b.value()) + " differ");
  }
  Matrix out = a.value() * b.value();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  return result(std::move(out), {&a, &b}, [pa, pb](const Matrix& g) {
    if (pa->requires_grad) accumulate(*pa, g * pb->value.transpose());
    if (pb->requires_grad) accumulate(*pb, pa->value.transpose() * g);
  });
}

Tensor transpose(const Tensor& a) {
  Node* pa = a.node().get();
  return result(a.value().transpose(), {&a},
                [pa](const Matrix& g) { accumulate(*pa, g.transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a.value(), b.value(), "add");
  Matrix out = a.value() + expand(b.value(), a.rows(), a.cols(), mode);
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  return result(std::move(out), {&a, &b}, [pa, pb, mode](const Matrix& g) {
    accumulate(*pa, g);
    if (pb->requires_grad) accumulate(*pb, reduce(g, mode));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a.value(), b.value(), "sub");
  Matrix out = a.value() - expand(b.value(), a.rows(), a.cols(), mode);
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  return result(std::move(out), {&a, &b}, [pa, pb, mode](const Matrix& g) {
    accumulate(*pa, g);
    if (pb->requires_grad) accumulate(*pb, -reduce(g, mode));
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a.value(), b.value(), "hadamard");
  Matrix out = a.value().cwiseProduct(expand(b.value(), a.rows(), a.cols(), mode));
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  return result(std::move(out), {&a, &b}, [pa, pb, mode](const Matrix& g) {
    if (pa->requires_grad) {
      accumulate(*pa, g.cwiseProduct(expand(pb->value, g.rows(), g.cols(), mode)));
    }
    if (pb->requires_grad) accumulate(*pb, reduce(g.cwiseProduct(pa->value), mode));
  });
}

Tensor scale_shift(const Tensor& a, double scale, double shift) {
  Matrix out = (a.value().array() * scale + shift).matrix();
  Node* pa = a.node().get();
  return result(std::move(out), {&a}, [pa, scale](const Matrix& g) { accumulate(*pa, g * scale); });
}

Tensor tanh(const Tensor& a) {
  Matrix out = a.value().array().tanh().matrix();
  Node* pa = a.node().get();
  return result(out, {&a}, [pa, out](const Matrix& g) {
    accumulate(*pa, (g.array() * (1.0 - out.array().square())).matrix());
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  Node* pa = a.node().get();
  return result(out, {&a}, [pa, out](const Matrix& g) {
    accumulate(*pa, (g.array() * out.array() * (1.0 - out.array())).matrix());
  });
}

Tensor log(const Tensor& a) {
  for (Index i = 0; i < a.size(); ++i) {
    const double x = a.value().data()[i];
    if (!(x > 0.0)) {
      std::ostringstream os;
      os << "log: non-positive entry " << x << " at flat index " << i;
      throw DomainError(os.str());
    }
  }
  Matrix out = a.value().array().log().matrix();
  Node* pa = a.node().get();
  return result(std::move(out), {&a}, [pa](const Matrix& g) {
    accumulate(*pa, (g.array() / pa->value.array()).matrix());
  });
}

Tensor log_floor(const Tensor& a, double floor) {
  Matrix out = a.value().array().max(floor).log().matrix();
  Node* pa = a.node().get();
  return result(std::move(out), {&a}, [pa, floor](const Matrix& g) {
    Matrix ga = Matrix::Zero(g.rows(), g.cols());
    for (Index i = 0; i < g.size(); ++i) {
      const double x = pa->value.data()[i];
      if (x > floor) ga.data()[i] = g.data()[i] / x;
    }
    accumulate(*pa, ga);
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row counts of " + shape_str(a.value()) + " and " +
                         shape_str(b.value()) + " differ");
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  const Index split = a.cols();
  return result(std::move(out), {&a, &b}, [pa, pb, split](const Matrix& g) {
    accumulate(*pa, g.leftCols(split));
    accumulate(*pb, g.rightCols(g.cols() - split));
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column counts of " + shape_str(parts.front().value()) +
                           " and " + shape_str(p.value()) + " differ");
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Tensor& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  auto node = new_node(std::move(out));
  bool any = false;
  for (const Tensor& p : parts) any = any || p.requires_grad();
  if (recording && any) {
    node->requires_grad = true;
    for (const Tensor& p : parts) node->inputs.push_back(p.node());
    std::vector<Node*> raw;
    for (const Tensor& p : parts) raw.push_back(p.node().get());
    node->backward = [raw = std::move(raw)](const Matrix& g) {
      Index offset = 0;
      for (Node* p : raw) {
        const Index r = p->value.rows();
        accumulate(*p, g.middleRows(offset, r));
        offset += r;
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor slice_rows(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") outside " + shape_str(a.value()));
  }
  Node* pa = a.node().get();
  return result(a.value().middleRows(start, count), {&a},
                [pa, start](const Matrix& g) { accumulate_block(*pa, start, 0, g); });
}

Tensor slice_cols(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") outside " + shape_str(a.value()));
  }
  Node* pa = a.node().get();
  return result(a.value().middleCols(start, count), {&a},
                [pa, start](const Matrix& g) { accumulate_block(*pa, 0, start, g); });
}

Tensor gather_rows(const Tensor& a, std::span<const int> index) {
  Matrix out(static_cast<Index>(index.size()), a.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= a.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(index[r]) + " outside " +
                           shape_str(a.value()));
    }
    out.row(static_cast<Index>(r)) = a.value().row(index[r]);
  }
  Node* pa = a.node().get();
  std::vector<int> idx(index.begin(), index.end());
  return result(std::move(out), {&a}, [pa, idx = std::move(idx)](const Matrix& g) {
    if (!pa->requires_grad) return;
    ensure_grad(*pa);
    for (std::size_t r = 0; r < idx.size(); ++r) pa->grad.row(idx[r]) += g.row(static_cast<Index>(r));
  });
}

Tensor repeat_rows(const Tensor& a, Index count) {
  if (a.rows() != 1) throw DimensionError("repeat_rows: expected a row, got " + shape_str(a.value()));
  Node* pa = a.node().get();
  return result(a.value().replicate(count, 1), {&a},
                [pa](const Matrix& g) { accumulate(*pa, g.colwise().sum()); });
}

Tensor segment_sum(const Tensor& a, std::span<const int> segment, Index segments) {
  if (static_cast<Index>(segment.size()) != a.rows()) {
    throw DimensionError("segment_sum: " + std::to_string(segment.size()) + " segment ids for " +
                         shape_str(a.value()));
  }
  Matrix out = Matrix::Zero(segments, a.cols());
  for (std::size_t r = 0; r < segment.size(); ++r) {
    if (segment[r] < 0 || segment[r] >= segments) {
      throw DimensionError("segment_sum: segment id " + std::to_string(segment[r]) + " outside [0, " +
                           std::to_string(segments) + ")");
    }
    out.row(segment[r]) += a.value().row(static_cast<Index>(r));
  }
  Node* pa = a.node().get();
  std::vector<int> seg(segment.begin(), segment.end());
  return result(std::move(out), {&a}, [pa, seg = std::move(seg)](const Matrix& g) {
    if (!pa->requires_grad) return;
    ensure_grad(*pa);
    for (std::size_t r = 0; r < seg.size(); ++r) pa->grad.row(static_cast<Index>(r)) += g.row(seg[r]);
  });
}

Tensor sum(const Tensor& a) {
  Node* pa = a.node().get();
  return result(Matrix::Constant(1, 1, a.value().sum()), {&a}, [pa](const Matrix& g) {
    accumulate(*pa, Matrix::Constant(pa->value.rows(), pa->value.cols(), g(0, 0)));
  });
}

Tensor sum_axis(const Tensor& a, int axis) {
  check_axis(axis, "sum_axis");
  Node* pa = a.node().get();
  if (axis == 0) {
    return result(a.value().colwise().sum(), {&a},
                  [pa](const Matrix& g) { accumulate(*pa, g.replicate(pa->value.rows(), 1)); });
  }
  return result(a.value().rowwise().sum(), {&a},
                [pa](const Matrix& g) { accumulate(*pa, g.replicate(1, pa->value.cols())); });
}

Tensor mean_axis(const Tensor& a, int axis) {
  check_axis(axis, "mean_axis");
  const Index count = axis == 0 ? a.rows() : a.cols();
  if (count == 0) throw DimensionError("mean_axis: empty axis in " + shape_str(a.value()));
  return scale_shift(sum_axis(a, axis), 1.0 / static_cast<double>(count));
}

Tensor softmax(const Tensor& a, int axis) {
  check_axis(axis, "softmax");
  Matrix out(a.rows(), a.cols());
  if (axis == 1) {
    for (Index r = 0; r < a.rows(); ++r) {
      const auto x = a.value().row(r).array();
      const auto e = (x - x.maxCoeff()).exp();
      out.row(r) = (e / e.sum()).matrix();
    }
  } else {
    for (Index c = 0; c < a.cols(); ++c) {
      const auto x = a.value().col(c).array();
      const auto e = (x - x.maxCoeff()).exp();
      out.col(c) = (e / e.sum()).matrix();
    }
  }
  Node* pa = a.node().get();
  return result(out, {&a}, [pa, out, axis](const Matrix& g) {
    Matrix gy = g.cwiseProduct(out);
    if (axis == 1) {
      const Eigen::VectorXd dots = gy.rowwise().sum();
      accumulate(*pa, gy - (out.array().colwise() * dots.array()).matrix());
    } else {
      const Eigen::RowVectorXd dots = gy.colwise().sum();
      accumulate(*pa, gy - (out.array().rowwise() * dots.array()).matrix());
    }
  });
}

Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw DomainError("dropout: rate must be below 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
  return hadamard(a, Tensor::constant(std::move(mask)));
}

Tensor kl_divergence(const Tensor& p, const Matrix& q, double floor) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw ContractError("kl_divergence: shapes " + shape_str(p.value()) + " and " + shape_str(q) +
                        " differ");
  }
  Matrix qf = q.array().max(floor).matrix();
  double total = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const double pi = p.value().data()[i];
    if (pi < 0.0) throw DomainError("kl_divergence: negative probability");
    if (pi > 0.0) total += pi * std::log(pi / qf.data()[i]);
  }
  Node* pp = p.node().get();
  return result(Matrix::Constant(1, 1, total), {&p}, [pp, qf = std::move(qf)](const Matrix& g) {
    Matrix gp = Matrix::Zero(pp->value.rows(), pp->value.cols());
    for (Index i = 0; i < gp.size(); ++i) {
      const double pi = pp->value.data()[i];
      if (pi > 0.0) gp.data()[i] = g(0, 0) * (std::log(pi / qf.data()[i]) + 1.0);
    }
    accumulate(*pp, gp);
  });
}

void backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss " + shape_str(loss.value()) + " is not a scalar");
  }
  Node* root = loss.node().get();
  if (root->consumed) throw ContractError("backward: tape already consumed");
  if (!root->requires_grad) throw ContractError("backward: loss is not on the gradient tape");

  // Shared ownership keeps every node alive while the tape is torn down below.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> seen;
  std::vector<std::shared_ptr<Node>> stack{loss.node()};
  seen.insert(root);
  while (!stack.empty()) {
    std::shared_ptr<Node> n = std::move(stack.back());
    stack.pop_back();
    for (const auto& in : n->inputs) {
      if (in->requires_grad && seen.insert(in.get()).second) stack.push_back(in);
    }
    order.push_back(std::move(n));
  }
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x->seq > y->seq; });

  accumulate(*root, Matrix::Ones(1, 1));
  for (const auto& n : order) {
    if (n->backward && n->has_grad) n->backward(n->grad);
  }
  for (const auto& n : order) {
    if (n->backward) {
      n->backward = nullptr;
      n->inputs.clear();
      n->grad = Matrix();
      n->has_grad = false;
      n->consumed = true;
    } else {
      ensure_grad(*n);
    }
  }
}

}  // namespace stg

// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over Tensor values.
//
// A Var is a handle to a node in a dynamically built graph. Leaves created
// with requires_grad=true act as trainable parameters; every op that touches
// at least one such leaf records a backward closure. Var::backward() walks the
// graph in reverse topological order and accumulates into Var::grad().
//
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "reenact/tensor.hpp"

namespace reenact {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Tensor& g);
  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Accumulated gradient; zero-filled tensor of value's shape if none yet.
  const Tensor& grad() const;
  void zero_grad() { node_->grad = Tensor(); }

  /// Backpropagates from this node. A single-element node is seeded with 1;
  /// otherwise `seed` must match value's shape.
  void backward() const;
  void backward(const Tensor& seed) const;

  /// Same value, cut from the graph.
  Var detach() const { return Var(node_->value, false); }

  bool defined() const { return static_cast<bool>(node_); }
  const std::shared_ptr<Node>& node() const { return node_; }

  /// Builds a result node. `backward` receives the result node and pushes
  /// gradients into its inputs; it is dropped when no input needs gradients.
  static Var make(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

 private:
  std::shared_ptr<Node> node_;
};

namespace ops {

// Elementwise; `b` may be a single-element Var broadcast over `a`.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);
Var mul_scalar(const Var& a, double s);
Var square(const Var& a);
Var leaky_relu(const Var& a, double slope);
/// Gradient passes only where lo < a < hi.
Var clamp(const Var& a, double lo, double hi);

Var sum(const Var& a);
Var mean(const Var& a);
/// {C, H, W} -> {C}
Var global_avg_pool(const Var& a);
Var flatten(const Var& a);

/// x: {Cin, H, W}; w: {Cout, Cin, k, k}; b: {Cout}. Zero padding.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
/// Per-channel normalization over H×W with learned affine gamma/beta ({C}).
Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps);
/// Nearest-neighbour upsampling by an integer factor on both spatial axes.
Var upsample_nearest(const Var& x, int factor);
/// Concatenates {Ci, H, W} maps along channels.
Var concat_channels(const std::vector<Var>& xs);
/// Flattens and joins into one 1-D Var (stacks score batches).
Var concat_flat(const std::vector<Var>& xs);

}  // namespace ops
}  // namespace reenact

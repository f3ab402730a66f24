// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "reenact/autograd.hpp"

namespace reenact {

/// Ordered collection of named trainable tensors. Order is registration order
/// and is what optimizers and archives iterate over.
class ParameterSet {
 public:
  void add(std::string name, Var v);
  void extend(const std::string& prefix, const ParameterSet& other);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  Var find(const std::string& name) const;

  void zero_grad() const;
  void set_requires_grad(bool on) const;

  std::map<std::string, Tensor> snapshot() const;
  /// Copies values in; every parameter must be present with a matching shape.
  void load(const std::map<std::string, Tensor>& values) const;

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

struct Conv2d {
  Var weight;  // {Cout, Cin, k, k}
  Var bias;    // {Cout}
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(int cin, int cout, int kernel, int stride, int pad, std::mt19937_64& rng,
         double gain = 1.0);

  Var operator()(const Var& x) const { return ops::conv2d(x, weight, bias, stride, pad); }
  void register_in(ParameterSet& ps, const std::string& prefix) const;
  int out_channels() const { return weight.shape()[0]; }
};

struct InstanceNorm {
  Var gamma;
  Var beta;
  double eps = 1e-5;

  InstanceNorm() = default;
  InstanceNorm(int channels, double eps);

  Var operator()(const Var& x) const { return ops::instance_norm(x, gamma, beta, eps); }
  void register_in(ParameterSet& ps, const std::string& prefix) const;
};

}  // namespace reenact

// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/nn.hpp"

#include <cmath>

#include "reenact/errors.hpp"

namespace reenact {

void ParameterSet::add(std::string name, Var v) {
  for (const auto& [n, _] : entries_) {
    if (n == name) throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
  entries_.emplace_back(std::move(name), std::move(v));
}

void ParameterSet::extend(const std::string& prefix, const ParameterSet& other) {
  for (const auto& [n, v] : other.entries_) add(prefix + n, v);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : entries_) n += v.size();
  return n;
}

Var ParameterSet::find(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw InvalidArgument("no parameter named '" + name + "'");
}

void ParameterSet::zero_grad() const {
  for (auto [_, v] : entries_) v.zero_grad();
}

void ParameterSet::set_requires_grad(bool on) const {
  for (auto [_, v] : entries_) v.set_requires_grad(on);
}

std::map<std::string, Tensor> ParameterSet::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [n, v] : entries_) out.emplace(n, v.value());
  return out;
}

void ParameterSet::load(const std::map<std::string, Tensor>& values) const {
  for (auto [n, v] : entries_) {
    auto it = values.find(n);
    if (it == values.end()) throw ShapeError("missing parameter '" + n + "'");
    require_shape(it->second, v.shape(), "parameter '" + n + "'");
    v.mutable_value() = it->second;
  }
}

Conv2d::Conv2d(int cin, int cout, int kernel, int stride_, int pad_, std::mt19937_64& rng,
               double gain)
    : stride(stride_), pad(pad_) {
  Tensor w({cout, cin, kernel, kernel});
  const double std_dev = gain * std::sqrt(2.0 / static_cast<double>(cin * kernel * kernel));
  std::normal_distribution<double> dist(0.0, std_dev);
  for (auto& x : w.values()) x = dist(rng);
  weight = Var(std::move(w), true);
  bias = Var(Tensor({cout}, 0.0), true);
}

void Conv2d::register_in(ParameterSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".weight", weight);
  ps.add(prefix + ".bias", bias);
}

InstanceNorm::InstanceNorm(int channels, double eps_)
    : gamma(Tensor({channels}, 1.0), true), beta(Tensor({channels}, 0.0), true), eps(eps_) {}

void InstanceNorm::register_in(ParameterSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".gamma", gamma);
  ps.add(prefix + ".beta", beta);
}

}  // namespace reenact

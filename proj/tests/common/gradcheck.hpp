// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks against the autograd engine.
//
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "reenact/autograd.hpp"
#include "reenact/nn.hpp"

namespace reenact::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
  std::string worst;
};

// The 1e-6 floor keeps structurally zero gradients (a bias feeding straight
// into instance normalization) from dividing pure rounding noise.
inline double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

/// Compares d loss / d p for `samples` scalars drawn uniformly over every
/// element of `params`. `loss` must rebuild the graph on each call.
inline GradCheckResult grad_check(const std::function<Var()>& loss,
                                  const std::vector<std::pair<std::string, Var>>& params, int samples,
                                  std::uint64_t seed, double h = 1e-5) {
  for (const auto& [name, p] : params) Var(p).zero_grad();
  loss().backward();

  std::vector<std::pair<std::size_t, std::size_t>> slots;  // (param, element)
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].second.size(); ++k) slots.emplace_back(i, k);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(slots.begin(), slots.end(), rng);
  if (static_cast<int>(slots.size()) > samples) slots.resize(samples);

  GradCheckResult result;
  for (const auto& [i, k] : slots) {
    Var p = params[i].second;
    const double analytic = p.grad()[k];
    double& w = p.mutable_value()[k];
    const double saved = w;
    w = saved + h;
    const double up = loss().value()[0];
    w = saved - h;
    const double down = loss().value()[0];
    w = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = rel_error(analytic, numeric);
    ++result.checked;
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = params[i].first + "[" + std::to_string(k) + "] analytic " + std::to_string(analytic) +
                     " numeric " + std::to_string(numeric);
    }
  }
  return result;
}

inline std::vector<std::pair<std::string, Var>> entries_of(const ParameterSet& ps) { return ps.entries(); }

}  // namespace reenact::testing

// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "reenact/config.hpp"
#include "reenact/nn.hpp"

namespace reenact {

struct DiscriminatorConfig {
  std::array<int, 5> widths = {32, 64, 128, 256, 1};
  double leaky_slope = 0.2;
  double norm_eps = 1e-5;
  int condition_channels = 3;
  std::uint64_t seed = 2;

  void validate() const;
  void write_to(KeyValueConfig& kv, const std::string& prefix = "discriminator.") const;
  static DiscriminatorConfig read_from(const KeyValueConfig& kv,
                                       const std::string& prefix = "discriminator.");
};

/// Five stride-2 4×4 convolutions over the image stacked with a boundary map.
/// Layers 2-4 are instance-normalised, layers 1-4 use a leaky activation, and
/// the last map is averaged into one score.
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorConfig cfg);

  const DiscriminatorConfig& config() const { return cfg_; }
  const ParameterSet& parameters() const { return params_; }

  /// `image` {3, N, N}; `condition` {C_b, N, N}. Returns a {1} score.
  Var score(const Var& image, const Var& condition) const;

 private:
  DiscriminatorConfig cfg_;
  std::array<Conv2d, 5> convs_;
  std::array<InstanceNorm, 3> norms_;
  ParameterSet params_;
};

}  // namespace reenact

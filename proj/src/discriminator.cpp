// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/discriminator.hpp"

#include <random>
#include <sstream>

#include "reenact/errors.hpp"

namespace reenact {

void DiscriminatorConfig::validate() const {
  for (int w : widths)
    if (w <= 0) throw InvalidArgument("discriminator widths must be positive");
  if (widths.back() != 1) throw InvalidArgument("the last discriminator layer must have one channel");
  if (condition_channels < 1 || condition_channels > 3) {
    throw InvalidArgument("discriminator condition channels must be 1, 2 or 3");
  }
  if (!(norm_eps >= 0.0)) throw InvalidArgument("normalization epsilon must be >= 0");
}

void DiscriminatorConfig::write_to(KeyValueConfig& kv, const std::string& p) const {
  std::string w;
  for (int x : widths) w += (w.empty() ? "" : ",") + std::to_string(x);
  kv.set(p + "widths", w);
  kv.set(p + "leaky_slope", format_double(leaky_slope));
  kv.set(p + "norm_eps", format_double(norm_eps));
  kv.set(p + "condition_channels", std::to_string(condition_channels));
  kv.set(p + "seed", std::to_string(seed));
}

DiscriminatorConfig DiscriminatorConfig::read_from(const KeyValueConfig& kv, const std::string& p) {
  DiscriminatorConfig c;
  if (kv.contains(p + "widths")) {
    std::stringstream ss(kv.get_string(p + "widths", ""));
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
      if (i >= c.widths.size()) throw InvalidArgument("discriminator widths needs 5 entries");
      c.widths[i++] = std::stoi(item);
    }
    if (i != c.widths.size()) throw InvalidArgument("discriminator widths needs 5 entries");
  }
  c.leaky_slope = kv.get_double(p + "leaky_slope", c.leaky_slope);
  c.norm_eps = kv.get_double(p + "norm_eps", c.norm_eps);
  c.condition_channels = static_cast<int>(kv.get_int(p + "condition_channels", c.condition_channels));
  c.seed = static_cast<std::uint64_t>(kv.get_int(p + "seed", static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

Discriminator::Discriminator(DiscriminatorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  int cin = 3 + cfg_.condition_channels;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i] = Conv2d(cin, cfg_.widths[i], 4, 2, 1, rng);
    convs_[i].register_in(params_, "layer" + std::to_string(i));
    if (i >= 1 && i <= 3) {
      norms_[i - 1] = InstanceNorm(cfg_.widths[i], cfg_.norm_eps);
      norms_[i - 1].register_in(params_, "norm" + std::to_string(i));
    }
    cin = cfg_.widths[i];
  }
}

Var Discriminator::score(const Var& image, const Var& condition) const {
  if (image.shape().size() != 3 || image.shape()[0] != 3) {
    throw ShapeError("discriminator image must be {3, N, N}, got " + shape_str(image.shape()));
  }
  const int n = image.shape()[1];
  if (image.shape()[2] != n || n % 32 != 0) {
    throw ShapeError("discriminator needs a square image with side divisible by 32, got " +
                     shape_str(image.shape()));
  }
  const Shape cond{cfg_.condition_channels, n, n};
  if (condition.shape() != cond) {
    throw ShapeError("discriminator condition: expected " + shape_str(cond) + ", got " +
                     shape_str(condition.shape()));
  }
  Var x = ops::concat_channels({image, condition});
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    x = convs_[i](x);
    if (i == convs_.size() - 1) break;
    if (i >= 1) x = norms_[i - 1](x);
    x = ops::leaky_relu(x, cfg_.leaky_slope);
  }
  return ops::mean(x);
}

}  // namespace reenact

// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives and the feature extractors they depend on.
//
// Every loss has a differentiable Var form (used by the trainer and the
// gradient checks) and a plain double form for evaluation.
//
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reenact/nn.hpp"

namespace reenact {

/// Maps an image to an embedding vector or a feature map. Implementations are
/// deterministic and carry frozen parameters.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Var extract(const Var& image) const = 0;
  virtual std::string descriptor() const = 0;
  virtual const ParameterSet& parameters() const { return empty_; }

  Tensor features(const Tensor& image) const { return extract(Var(image)).value(); }
  /// Loads weights saved in the named-tensor archive format.
  void load_weights(const std::filesystem::path& archive) const;

 private:
  ParameterSet empty_;
};

/// Features are the raw pixels ("identity").
class PixelExtractor final : public FeatureExtractor {
 public:
  Var extract(const Var& image) const override { return image; }
  std::string descriptor() const override { return "identity"; }
};

/// Fixed random-weight 3-layer convolutional stack ("random_conv3"); the
/// output is the third layer's activation map.
class RandomConvFeatures final : public FeatureExtractor {
 public:
  explicit RandomConvFeatures(std::uint64_t seed);
  Var extract(const Var& image) const override;
  std::string descriptor() const override { return "random_conv3"; }
  const ParameterSet& parameters() const override { return params_; }

 private:
  std::array<Conv2d, 3> convs_;
  ParameterSet params_;
};

/// Small fixed-seed convolutional encoder pooled into a 128-d vector
/// ("conv_embed128").
class ConvEmbedder final : public FeatureExtractor {
 public:
  explicit ConvEmbedder(std::uint64_t seed);
  Var extract(const Var& image) const override;
  std::string descriptor() const override { return "conv_embed128"; }
  const ParameterSet& parameters() const override { return params_; }

 private:
  std::array<Conv2d, 4> convs_;
  ParameterSet params_;
};

/// Registry lookup by descriptor: "identity", "random_conv3", "conv_embed128".
std::shared_ptr<FeatureExtractor> make_extractor(const std::string& descriptor, std::uint64_t seed);

struct LossWeights {
  double content = 0.01;
  double adversarial = 0.001;
  double identity = 0.001;

  void validate() const;
};

struct LossParts {
  double identity = 0.0;
  double content = 0.0;
  double adversarial = 0.0;
};

struct LossBreakdown {
  double identity = 0.0;
  double content = 0.0;
  double adversarial = 0.0;
  double total = 0.0;
};

/// Σ (e_gen − e_tgt)²; raw embeddings, no renormalisation.
Var identity_loss(const Var& e_gen, const Var& e_tgt);
double identity_loss(std::span<const double> e_gen, std::span<const double> e_tgt);

/// Mean squared difference of the extractor's features of `generated` and `target`.
Var perceptual_loss(const FeatureExtractor& extractor, const Var& generated, const Var& target);
double perceptual_loss(const FeatureExtractor& extractor, const Tensor& generated,
                       const Tensor& target);

/// E[(r − E f + 1)²] + E[(f − E r − 1)²] over score batches.
Var ralsgan_generator_loss(const Var& d_real, const Var& d_fake);
double ralsgan_generator_loss(std::span<const double> d_real, std::span<const double> d_fake);

/// Role-swapped counterpart: E[(r − E f − 1)²] + E[(f − E r + 1)²].
Var ralsgan_discriminator_loss(const Var& d_real, const Var& d_fake);
double ralsgan_discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake);

/// total = λc·content + λa·adversarial + λi·identity. Throws InvalidArgument
/// naming the first non-finite term.
LossBreakdown total_loss(const LossParts& parts, const LossWeights& w);
Var total_loss(const Var& identity, const Var& content, const Var& adversarial, const LossWeights& w);

}  // namespace reenact

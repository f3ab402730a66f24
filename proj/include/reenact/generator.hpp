// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Reenactment generator: two FPN encoders (source, target) feeding a
// concatenating multi-scale decoder whose output is added to the target image.
//
#pragma once

#include <array>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "reenact/config.hpp"
#include "reenact/nn.hpp"

namespace reenact {

inline constexpr int kPyramidLevels = 5;
inline constexpr std::array<int, kPyramidLevels> kPyramidStrides = {2, 4, 8, 16, 32};

struct GeneratorConfig {
  int crop_size = 256;
  int lateral_channels = 64;
  std::string backbone = "plain5";
  std::array<int, kPyramidLevels> backbone_widths = {16, 32, 64, 128, 256};
  bool share_encoders = false;
  std::vector<int> decoder_channels = {64, 32, 16};
  double leaky_slope = 0.2;
  /// Init gain of the final 3-channel projection; 0 gives x̂ == target.
  double output_gain = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
  void write_to(KeyValueConfig& kv, const std::string& prefix = "generator.") const;
  static GeneratorConfig read_from(const KeyValueConfig& kv, const std::string& prefix = "generator.");
};

/// Five merged maps P1..P5 at strides 2..32, each with `lateral_channels` channels.
struct FeaturePyramid {
  std::array<Var, kPyramidLevels> levels;
};

/// Bottom-up feature extractor with five outputs at strides 2..32.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual std::array<Var, kPyramidLevels> forward(const Var& image) const = 0;
  virtual std::array<int, kPyramidLevels> channels() const = 0;
  virtual void register_in(ParameterSet& ps, const std::string& prefix) const = 0;
};

/// Stride-2 3×3 convolution + leaky activation per stage.
class PlainBackbone final : public Backbone {
 public:
  PlainBackbone(std::array<int, kPyramidLevels> widths, double slope, std::mt19937_64& rng);
  std::array<Var, kPyramidLevels> forward(const Var& image) const override;
  std::array<int, kPyramidLevels> channels() const override { return widths_; }
  void register_in(ParameterSet& ps, const std::string& prefix) const override;

 private:
  std::array<int, kPyramidLevels> widths_;
  std::array<Conv2d, kPyramidLevels> stages_;
  double slope_;
};

std::unique_ptr<Backbone> make_backbone(const GeneratorConfig& cfg, std::mt19937_64& rng);

class FpnEncoder {
 public:
  FpnEncoder(const GeneratorConfig& cfg, std::mt19937_64& rng);

  /// Lateral 1×1 projections of the backbone outputs, merged top-down:
  /// P5 = L5, Pi = Li + upsample(P(i+1)).
  FeaturePyramid forward(const Var& image) const;
  void register_in(ParameterSet& ps, const std::string& prefix) const;

  const Backbone& backbone() const { return *backbone_; }
  const Conv2d& lateral(int level) const { return laterals_[level]; }

 private:
  std::shared_ptr<Backbone> backbone_;
  std::array<Conv2d, kPyramidLevels> laterals_;
};

enum class EncoderRole { kSource, kTarget };

class Generator {
 public:
  explicit Generator(GeneratorConfig cfg);

  const GeneratorConfig& config() const { return cfg_; }
  const ParameterSet& parameters() const { return params_; }

  FeaturePyramid encode(const Var& image, EncoderRole role) const;
  /// Top four levels of both pyramids upsampled to stride 4 and concatenated,
  /// decoded with the target's P1 added after the first upsampling; the final
  /// projection is added to `tgt_image` and clamped to [-1, 1].
  Var decode(const FeaturePyramid& src, const FeaturePyramid& tgt, const Var& tgt_image) const;
  Var generate(const Var& src_image, const Var& tgt_image) const;
  Tensor generate(const Tensor& src_image, const Tensor& tgt_image) const;

  /// Zeroes the final projection so generate() returns the target image.
  void zero_output_projection() const;

  const FpnEncoder& encoder(EncoderRole role) const;

 private:
  void check_image(const Var& image, const char* what) const;

  GeneratorConfig cfg_;
  std::shared_ptr<FpnEncoder> src_encoder_;
  std::shared_ptr<FpnEncoder> tgt_encoder_;
  std::vector<Conv2d> stages_;
  Conv2d skip_;  // unused when widths already match
  bool has_skip_projection_ = false;
  Conv2d output_;
  ParameterSet params_;
};

}  // namespace reenact

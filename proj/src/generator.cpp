// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/generator.hpp"

#include <sstream>

#include "reenact/errors.hpp"

namespace reenact {
namespace {

std::string join_ints(const auto& xs) {
  std::string out;
  for (auto x : xs) {
    if (!out.empty()) out += ',';
    out += std::to_string(x);
  }
  return out;
}

std::vector<int> split_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw InvalidArgument("config key '" + key + "': bad integer list '" + s + "'");
    }
  }
  return out;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (crop_size <= 0 || crop_size % 32 != 0) {
    throw InvalidArgument("generator crop size must be a positive multiple of 32, got " +
                          std::to_string(crop_size));
  }
  if (lateral_channels <= 0) throw InvalidArgument("lateral channel count must be positive");
  if (decoder_channels.size() < 2) throw InvalidArgument("decoder needs at least two stages");
  for (int w : decoder_channels)
    if (w <= 0) throw InvalidArgument("decoder widths must be positive");
  for (int w : backbone_widths)
    if (w <= 0) throw InvalidArgument("backbone widths must be positive");
}

void GeneratorConfig::write_to(KeyValueConfig& kv, const std::string& p) const {
  kv.set(p + "crop_size", std::to_string(crop_size));
  kv.set(p + "lateral_channels", std::to_string(lateral_channels));
  kv.set(p + "backbone", backbone);
  kv.set(p + "backbone_widths", join_ints(backbone_widths));
  kv.set(p + "share_encoders", share_encoders ? "true" : "false");
  kv.set(p + "decoder_channels", join_ints(decoder_channels));
  kv.set(p + "leaky_slope", format_double(leaky_slope));
  kv.set(p + "output_gain", format_double(output_gain));
  kv.set(p + "seed", std::to_string(seed));
}

GeneratorConfig GeneratorConfig::read_from(const KeyValueConfig& kv, const std::string& p) {
  GeneratorConfig c;
  c.crop_size = static_cast<int>(kv.get_int(p + "crop_size", c.crop_size));
  c.lateral_channels = static_cast<int>(kv.get_int(p + "lateral_channels", c.lateral_channels));
  c.backbone = kv.get_string(p + "backbone", c.backbone);
  if (kv.contains(p + "backbone_widths")) {
    auto w = split_ints(kv.get_string(p + "backbone_widths", ""), p + "backbone_widths");
    if (w.size() != kPyramidLevels) throw InvalidArgument("backbone_widths needs 5 entries");
    std::copy(w.begin(), w.end(), c.backbone_widths.begin());
  }
  c.share_encoders = kv.get_bool(p + "share_encoders", c.share_encoders);
  if (kv.contains(p + "decoder_channels")) {
    c.decoder_channels = split_ints(kv.get_string(p + "decoder_channels", ""), p + "decoder_channels");
  }
  c.leaky_slope = kv.get_double(p + "leaky_slope", c.leaky_slope);
  c.output_gain = kv.get_double(p + "output_gain", c.output_gain);
  c.seed = static_cast<std::uint64_t>(kv.get_int(p + "seed", static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

PlainBackbone::PlainBackbone(std::array<int, kPyramidLevels> widths, double slope,
                             std::mt19937_64& rng)
    : widths_(widths), slope_(slope) {
  int cin = 3;
  for (int i = 0; i < kPyramidLevels; ++i) {
    stages_[i] = Conv2d(cin, widths_[i], 3, 2, 1, rng);
    cin = widths_[i];
  }
}

std::array<Var, kPyramidLevels> PlainBackbone::forward(const Var& image) const {
  std::array<Var, kPyramidLevels> out;
  Var x = image;
  for (int i = 0; i < kPyramidLevels; ++i) {
    x = ops::leaky_relu(stages_[i](x), slope_);
    out[i] = x;
  }
  return out;
}

void PlainBackbone::register_in(ParameterSet& ps, const std::string& prefix) const {
  for (int i = 0; i < kPyramidLevels; ++i) stages_[i].register_in(ps, prefix + "stage" + std::to_string(i));
}

std::unique_ptr<Backbone> make_backbone(const GeneratorConfig& cfg, std::mt19937_64& rng) {
  if (cfg.backbone == "plain5") {
    return std::make_unique<PlainBackbone>(cfg.backbone_widths, cfg.leaky_slope, rng);
  }
  throw InvalidArgument("unknown backbone '" + cfg.backbone + "'");
}

FpnEncoder::FpnEncoder(const GeneratorConfig& cfg, std::mt19937_64& rng)
    : backbone_(make_backbone(cfg, rng)) {
  const auto widths = backbone_->channels();
  for (int i = 0; i < kPyramidLevels; ++i) {
    laterals_[i] = Conv2d(widths[i], cfg.lateral_channels, 1, 1, 0, rng);
  }
}

FeaturePyramid FpnEncoder::forward(const Var& image) const {
  const auto features = backbone_->forward(image);
  FeaturePyramid pyr;
  pyr.levels[kPyramidLevels - 1] = laterals_[kPyramidLevels - 1](features[kPyramidLevels - 1]);
  for (int i = kPyramidLevels - 2; i >= 0; --i) {
    pyr.levels[i] = ops::add(laterals_[i](features[i]), ops::upsample_nearest(pyr.levels[i + 1], 2));
  }
  return pyr;
}

void FpnEncoder::register_in(ParameterSet& ps, const std::string& prefix) const {
  backbone_->register_in(ps, prefix + "backbone.");
  for (int i = 0; i < kPyramidLevels; ++i) laterals_[i].register_in(ps, prefix + "lateral" + std::to_string(i));
}

Generator::Generator(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  src_encoder_ = std::make_shared<FpnEncoder>(cfg_, rng);
  if (cfg_.share_encoders) {
    tgt_encoder_ = src_encoder_;
    src_encoder_->register_in(params_, "encoder.shared.");
  } else {
    tgt_encoder_ = std::make_shared<FpnEncoder>(cfg_, rng);
    src_encoder_->register_in(params_, "encoder.source.");
    tgt_encoder_->register_in(params_, "encoder.target.");
  }

  const int d = cfg_.lateral_channels;
  int cin = 8 * d;
  for (std::size_t i = 0; i < cfg_.decoder_channels.size(); ++i) {
    stages_.emplace_back(cin, cfg_.decoder_channels[i], 3, 1, 1, rng);
    stages_.back().register_in(params_, "decoder.stage" + std::to_string(i));
    cin = cfg_.decoder_channels[i];
  }
  has_skip_projection_ = d != cfg_.decoder_channels[0];
  if (has_skip_projection_) {
    skip_ = Conv2d(d, cfg_.decoder_channels[0], 1, 1, 0, rng);
    skip_.register_in(params_, "decoder.skip");
  }
  output_ = Conv2d(cin, 3, 1, 1, 0, rng, cfg_.output_gain);
  output_.register_in(params_, "decoder.output");
}

const FpnEncoder& Generator::encoder(EncoderRole role) const {
  return role == EncoderRole::kSource ? *src_encoder_ : *tgt_encoder_;
}

void Generator::check_image(const Var& image, const char* what) const {
  const Shape expected{3, cfg_.crop_size, cfg_.crop_size};
  if (image.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected " + shape_str(expected) + ", got " +
                     shape_str(image.shape()));
  }
}

FeaturePyramid Generator::encode(const Var& image, EncoderRole role) const {
  check_image(image, "encode_pyramid");
  return encoder(role).forward(image);
}

Var Generator::decode(const FeaturePyramid& src, const FeaturePyramid& tgt, const Var& tgt_image) const {
  check_image(tgt_image, "decode target image");
  const int n = cfg_.crop_size, d = cfg_.lateral_channels;
  for (const FeaturePyramid* pyr : {&src, &tgt}) {
    for (int i = 0; i < kPyramidLevels; ++i) {
      const int s = n / kPyramidStrides[i];
      const Shape expected{d, s, s};
      if (!pyr->levels[i].defined() || pyr->levels[i].shape() != expected) {
        throw ShapeError("decode: pyramid level " + std::to_string(i + 1) + " expected " +
                         shape_str(expected) + ", got " +
                         (pyr->levels[i].defined() ? shape_str(pyr->levels[i].shape()) : "nothing"));
      }
    }
  }

  std::vector<Var> parts;
  for (const FeaturePyramid* pyr : {&src, &tgt}) {
    for (int i = 1; i < kPyramidLevels; ++i) {
      parts.push_back(ops::upsample_nearest(pyr->levels[i], kPyramidStrides[i] / 4));
    }
  }
  Var x = ops::concat_channels(parts);
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    x = ops::leaky_relu(stages_[i](x), cfg_.leaky_slope);
    if (i == 0) {
      x = ops::upsample_nearest(x, 2);
      const Var& p1 = tgt.levels[0];
      x = ops::add(x, has_skip_projection_ ? skip_(p1) : p1);
    } else if (i == 1) {
      x = ops::upsample_nearest(x, 2);
    }
  }
  return ops::clamp(ops::add(output_(x), tgt_image), -1.0, 1.0);
}

Var Generator::generate(const Var& src_image, const Var& tgt_image) const {
  check_image(src_image, "generate source");
  return decode(encode(src_image, EncoderRole::kSource), encode(tgt_image, EncoderRole::kTarget),
                tgt_image);
}

Tensor Generator::generate(const Tensor& src_image, const Tensor& tgt_image) const {
  return generate(Var(src_image), Var(tgt_image)).value();
}

void Generator::zero_output_projection() const {
  Var w = output_.weight, b = output_.bias;
  w.mutable_value().fill(0.0);
  b.mutable_value().fill(0.0);
}

}  // namespace reenact

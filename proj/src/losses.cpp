// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/losses.hpp"

#include <cmath>
#include <random>

#include "reenact/archive.hpp"
#include "reenact/errors.hpp"

namespace reenact {
namespace {

constexpr double kFeatureSlope = 0.2;

Var vec(std::span<const double> xs) {
  return Var(Tensor({static_cast<int>(xs.size())}, std::vector<double>(xs.begin(), xs.end())));
}

void require_scores(const Var& d_real, const Var& d_fake) {
  if (d_real.size() == 0 || d_fake.size() == 0) {
    throw InvalidArgument("relativistic loss needs nonempty score batches");
  }
}

// (a − mean(b) + offset)² averaged over a.
Var relativistic_term(const Var& a, const Var& b, double offset) {
  return ops::mean(ops::square(ops::add_scalar(ops::sub(a, ops::mean(b)), offset)));
}

}  // namespace

void FeatureExtractor::load_weights(const std::filesystem::path& archive) const {
  parameters().load(read_archive(archive));
}

RandomConvFeatures::RandomConvFeatures(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  convs_[0] = Conv2d(3, 8, 3, 1, 1, rng);
  convs_[1] = Conv2d(8, 16, 3, 2, 1, rng);
  convs_[2] = Conv2d(16, 16, 3, 1, 1, rng);
  for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].register_in(params_, "conv" + std::to_string(i));
  params_.set_requires_grad(false);
}

Var RandomConvFeatures::extract(const Var& image) const {
  Var x = image;
  for (const auto& c : convs_) x = ops::leaky_relu(c(x), kFeatureSlope);
  return x;
}

ConvEmbedder::ConvEmbedder(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  convs_[0] = Conv2d(3, 16, 3, 2, 1, rng);
  convs_[1] = Conv2d(16, 32, 3, 2, 1, rng);
  convs_[2] = Conv2d(32, 64, 3, 2, 1, rng);
  convs_[3] = Conv2d(64, 128, 1, 1, 0, rng);
  for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].register_in(params_, "conv" + std::to_string(i));
  params_.set_requires_grad(false);
}

Var ConvEmbedder::extract(const Var& image) const {
  Var x = image;
  for (std::size_t i = 0; i + 1 < convs_.size(); ++i) x = ops::leaky_relu(convs_[i](x), kFeatureSlope);
  return ops::global_avg_pool(convs_.back()(x));
}

std::shared_ptr<FeatureExtractor> make_extractor(const std::string& descriptor, std::uint64_t seed) {
  if (descriptor == "identity") return std::make_shared<PixelExtractor>();
  if (descriptor == "random_conv3") return std::make_shared<RandomConvFeatures>(seed);
  if (descriptor == "conv_embed128") return std::make_shared<ConvEmbedder>(seed);
  throw InvalidArgument("unknown feature extractor '" + descriptor + "'");
}

void LossWeights::validate() const {
  for (double w : {content, adversarial, identity}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("loss weights must be finite and >= 0");
  }
}

Var identity_loss(const Var& e_gen, const Var& e_tgt) {
  if (e_gen.shape() != e_tgt.shape()) {
    throw ShapeError("identity_loss: embedding shapes " + shape_str(e_gen.shape()) + " and " +
                     shape_str(e_tgt.shape()) + " differ");
  }
  return ops::sum(ops::square(ops::sub(e_gen, e_tgt)));
}

double identity_loss(std::span<const double> e_gen, std::span<const double> e_tgt) {
  if (e_gen.size() != e_tgt.size()) {
    throw ShapeError("identity_loss: embedding dimensions " + std::to_string(e_gen.size()) +
                     " and " + std::to_string(e_tgt.size()) + " differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < e_gen.size(); ++i) s += (e_gen[i] - e_tgt[i]) * (e_gen[i] - e_tgt[i]);
  return s;
}

Var perceptual_loss(const FeatureExtractor& extractor, const Var& generated, const Var& target) {
  if (generated.shape() != target.shape()) {
    throw ShapeError("perceptual_loss: image shapes " + shape_str(generated.shape()) + " and " +
                     shape_str(target.shape()) + " differ");
  }
  const Var fg = extractor.extract(generated);
  const Var ft = extractor.extract(target);
  if (fg.shape() != ft.shape()) {
    throw ShapeError("perceptual_loss: extractor produced mismatched shapes " +
                     shape_str(fg.shape()) + " and " + shape_str(ft.shape()));
  }
  return ops::mean(ops::square(ops::sub(fg, ft)));
}

double perceptual_loss(const FeatureExtractor& extractor, const Tensor& generated, const Tensor& target) {
  return perceptual_loss(extractor, Var(generated), Var(target)).value()[0];
}

Var ralsgan_generator_loss(const Var& d_real, const Var& d_fake) {
  require_scores(d_real, d_fake);
  return ops::add(relativistic_term(d_real, d_fake, 1.0), relativistic_term(d_fake, d_real, -1.0));
}

double ralsgan_generator_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw InvalidArgument("relativistic loss needs nonempty score batches");
  return ralsgan_generator_loss(vec(d_real), vec(d_fake)).value()[0];
}

Var ralsgan_discriminator_loss(const Var& d_real, const Var& d_fake) {
  require_scores(d_real, d_fake);
  return ops::add(relativistic_term(d_real, d_fake, -1.0), relativistic_term(d_fake, d_real, 1.0));
}

double ralsgan_discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw InvalidArgument("relativistic loss needs nonempty score batches");
  return ralsgan_discriminator_loss(vec(d_real), vec(d_fake)).value()[0];
}

LossBreakdown total_loss(const LossParts& parts, const LossWeights& w) {
  w.validate();
  const std::pair<const char*, double> named[] = {
      {"identity", parts.identity}, {"content", parts.content}, {"adversarial", parts.adversarial}};
  for (const auto& [name, v] : named) {
    if (!std::isfinite(v)) throw TrainingError(std::string("non-finite ") + name + " loss");
  }
  LossBreakdown b;
  b.identity = parts.identity;
  b.content = parts.content;
  b.adversarial = parts.adversarial;
  b.total = w.content * parts.content + w.adversarial * parts.adversarial + w.identity * parts.identity;
  return b;
}

Var total_loss(const Var& identity, const Var& content, const Var& adversarial, const LossWeights& w) {
  w.validate();
  return ops::add(ops::add(ops::mul_scalar(content, w.content), ops::mul_scalar(adversarial, w.adversarial)),
                  ops::mul_scalar(identity, w.identity));
}

}  // namespace reenact

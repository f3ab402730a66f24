// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Adversarial training: per-step discriminator then generator update with
// Adam, linear learning-rate decay, checkpoints and a per-step loss log.
//
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reenact/archive.hpp"
#include "reenact/config.hpp"
#include "reenact/data.hpp"
#include "reenact/discriminator.hpp"
#include "reenact/generator.hpp"
#include "reenact/losses.hpp"

namespace reenact {

struct AdamConfig {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainingConfig {
  double lr_initial = 1e-4;
  double lr_final = 1e-7;
  int decay_start_epoch = 40;
  int total_epochs = 100;
  int batch_size = 1;
  /// Sampled pairs per epoch; 0 means one per manifest entry.
  int pairs_per_epoch = 0;
  /// Steps between checkpoints; 0 writes only the final one.
  int checkpoint_interval = 0;
  AdamConfig adam;
  LossWeights weights;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  ScenarioSpec scenario;
  std::string identity_extractor = "conv_embed128";
  std::string content_extractor = "random_conv3";
  std::uint64_t extractor_seed = 7;
  double boundary_line_width = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// Derives every component seed (networks, sampler, extractors) from one value.
  void apply_seed(std::uint64_t master_seed);

  KeyValueConfig to_kv() const;
  static TrainingConfig from_kv(const KeyValueConfig& kv);
  std::string digest() const { return to_kv().digest(); }
};

/// lr_initial before decay_start_epoch, then linear down to lr_final at total_epochs.
double lr_schedule(double epoch, const TrainingConfig& cfg);

class Adam {
 public:
  Adam(ParameterSet params, AdamConfig cfg);

  /// One bias-corrected update from the accumulated gradients. Parameters
  /// without a gradient are left alone.
  void step(double lr);
  long long steps() const { return t_; }

  TensorMap state(const std::string& prefix) const;
  void load_state(const TensorMap& tensors, const std::string& prefix, long long steps);

 private:
  ParameterSet params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  long long t_ = 0;
};

struct TrainingSample {
  Tensor source;
  Tensor target;
  LandmarkSet source_landmarks;
};

struct StepResult {
  LossBreakdown generator;
  double discriminator = 0.0;
};

struct LogRow {
  long long step = 0;
  double lr = 0.0;
  LossBreakdown generator;
  double discriminator = 0.0;
};

std::string loss_log_csv(std::span<const LogRow> rows);

struct TrainState {
  long long epoch = 0;
  long long step = 0;
  std::string sampler_state;
  LossBreakdown running_generator;  // means over all completed steps
  double running_discriminator = 0.0;
};

class Trainer {
 public:
  explicit Trainer(TrainingConfig cfg);

  const TrainingConfig& config() const { return cfg_; }
  const Generator& generator() const { return generator_; }
  const Discriminator& discriminator() const { return discriminator_; }
  const FeatureExtractor& identity_extractor() const { return *identity_; }
  const FeatureExtractor& content_extractor() const { return *content_; }
  const TrainState& state() const { return state_; }
  AnchorTemplate anchor_template() const { return AnchorTemplate::standard(cfg_.generator.crop_size); }

  /// x̂ = G(src, tgt); discriminator update on detached x̂ against the source
  /// conditioned on the source's boundary map; then generator update on the
  /// weighted total. Throws TrainingError on a non-finite term.
  StepResult train_step(std::span<const TrainingSample> batch, double lr);
  StepResult train_step(const TrainingSample& sample, double lr) { return train_step({&sample, 1}, lr); }

  struct RunOptions {
    std::optional<std::filesystem::path> checkpoint_dir;
    /// Called after every step (for streaming logs).
    std::function<void(const LogRow&)> on_step;
  };

  /// Runs from the current state to total_epochs over pairs drawn from the
  /// manifest. The final state is checkpointed when a directory is given.
  std::vector<LogRow> train(const DatasetManifest& manifest, const RunOptions& options);

  void save_checkpoint(const std::filesystem::path& dir) const;
  /// Restores parameters, optimizer moments and counters written by
  /// save_checkpoint. The directory's config must match this trainer's.
  void load_checkpoint(const std::filesystem::path& dir);

 private:
  TrainingConfig cfg_;
  Generator generator_;
  Discriminator discriminator_;
  std::shared_ptr<FeatureExtractor> identity_;
  std::shared_ptr<FeatureExtractor> content_;
  Adam adam_g_;
  Adam adam_d_;
  TrainState state_;
};

/// Reads the config stored in a checkpoint directory.
TrainingConfig read_checkpoint_config(const std::filesystem::path& dir);

/// Generator with parameters loaded from a checkpoint; throws ShapeError when
/// the archive does not match the stored config.
Generator load_generator(const std::filesystem::path& dir);

}  // namespace reenact

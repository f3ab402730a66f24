// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "reenact/errors.hpp"
#include "reenact/training.hpp"

namespace reenact {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("reenact_train_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

TrainingConfig tiny_config() {
  TrainingConfig c;
  c.generator.crop_size = 32;
  c.generator.lateral_channels = 4;
  c.generator.backbone_widths = {4, 6, 8, 8, 8};
  c.generator.decoder_channels = {8, 6, 4};
  c.discriminator.widths = {6, 8, 8, 8, 1};
  c.total_epochs = 3;
  c.decay_start_epoch = 1;
  c.apply_seed(11);
  return c;
}

const DatasetManifest& manifest() {
  static const DatasetManifest m = [] {
    SynthOptions opt;
    opt.size = 48;
    return build_synthetic_manifest(3, 2, scratch("manifest"), 5, opt);
  }();
  return m;
}

TrainingSample sample(const Trainer& t, std::size_t s, std::size_t g) {
  const auto tmpl = t.anchor_template();
  const NormalizedFace src = load_normalized(manifest(), s, tmpl);
  return {src.image, load_normalized(manifest(), g, tmpl).image, src.landmarks};
}

TEST(Schedule, Values) {
  TrainingConfig c;
  EXPECT_EQ(lr_schedule(0, c), 1e-4);
  EXPECT_EQ(lr_schedule(40, c), 1e-4);
  EXPECT_NEAR(lr_schedule(70, c), 5.005e-5, 1e-18);
  EXPECT_NEAR(lr_schedule(100, c), 1e-7, 1e-18);
  double prev = lr_schedule(0, c);
  for (double e = 0; e <= 100; e += 0.5) {
    const double lr = lr_schedule(e, c);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
  EXPECT_NEAR(lr_schedule(40.000001, c), 1e-4, 1e-11);
}

TEST(Config, ValidationAndRoundTrip) {
  TrainingConfig c = tiny_config();
  c.scenario.kind = ScenarioKind::kOneToAnother;
  c.scenario.source_identity = "id000";
  c.scenario.target_identity = "id001";
  const TrainingConfig back = TrainingConfig::from_kv(c.to_kv());
  EXPECT_EQ(back.to_kv().dump(), c.to_kv().dump());
  EXPECT_EQ(back.digest(), c.digest());

  TrainingConfig bad = c;
  bad.lr_final = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.decay_start_epoch = bad.total_epochs;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Config, SeedDerivation) {
  TrainingConfig a, b;
  a.apply_seed(3);
  b.apply_seed(3);
  EXPECT_EQ(a.digest(), b.digest());
  b.apply_seed(4);
  EXPECT_NE(a.generator.seed, b.generator.seed);
  EXPECT_NE(a.scenario.seed, b.scenario.seed);
}

TEST(TrainStep, ZeroLearningRateKeepsParameters) {
  Trainer t(tiny_config());
  const auto g0 = t.generator().parameters().snapshot();
  const auto d0 = t.discriminator().parameters().snapshot();
  const StepResult r = t.train_step(sample(t, 0, 3), 0.0);
  EXPECT_TRUE(std::isfinite(r.generator.total));
  EXPECT_EQ(t.generator().parameters().snapshot(), g0);
  EXPECT_EQ(t.discriminator().parameters().snapshot(), d0);
  EXPECT_EQ(t.state().step, 1);
}

TEST(TrainStep, EachHalfStepOnlyMovesItsNetwork) {
  TrainingConfig c = tiny_config();
  c.weights.adversarial = 0.0;
  c.weights.content = 0.0;
  c.weights.identity = 0.0;
  Trainer t(c);
  const auto g0 = t.generator().parameters().snapshot();
  t.train_step(sample(t, 0, 3), 1e-3);
  // With all generator weights zero the generator receives no gradient.
  EXPECT_EQ(t.generator().parameters().snapshot(), g0);
  EXPECT_TRUE(t.discriminator().parameters().find("layer0.weight").requires_grad());

  TrainingConfig c2 = tiny_config();
  Trainer u(c2);
  const auto d0 = u.discriminator().parameters().snapshot();
  const auto g1 = u.generator().parameters().snapshot();
  u.train_step(sample(u, 1, 4), 1e-3);
  EXPECT_NE(u.discriminator().parameters().snapshot(), d0);
  EXPECT_NE(u.generator().parameters().snapshot(), g1);
}

TEST(TrainStep, PixelReconstructionConverges) {
  TrainingConfig c = tiny_config();
  c.weights = {1.0, 0.0, 0.0};
  c.content_extractor = "identity";
  Trainer t(c);
  const TrainingSample s = sample(t, 0, 3);
  const double first = t.train_step(s, 1e-3).generator.content;
  double last = first;
  for (int i = 0; i < 150; ++i) last = t.train_step(s, 1e-3).generator.content;
  EXPECT_LT(last, 0.2 * first);
  const Tensor out = t.generator().generate(s.source, s.target);
  double mse = 0;
  for (std::size_t i = 0; i < out.size(); ++i) mse += (out[i] - s.target[i]) * (out[i] - s.target[i]);
  EXPECT_LT(mse / out.size(), 1e-3);
}

TEST(TrainStep, NonFiniteLossNamesTermAndStep) {
  Trainer t(tiny_config());
  TrainingSample s = sample(t, 0, 3);
  s.target[5] = std::numeric_limits<double>::quiet_NaN();
  try {
    t.train_step(s, 1e-4);
    FAIL();
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("loss"), std::string::npos) << msg;
  }
  EXPECT_TRUE(t.discriminator().parameters().find("layer0.weight").requires_grad());
}

TEST(Train, ZeroEpochsWritesInitialCheckpoint) {
  TrainingConfig c = tiny_config();
  c.total_epochs = 0;
  c.decay_start_epoch = 0;
  Trainer t(c);
  const fs::path dir = scratch("zero");
  const auto log = t.train(manifest(), {dir, {}});
  EXPECT_TRUE(log.empty());
  EXPECT_EQ(t.state().step, 0);
  EXPECT_TRUE(fs::exists(dir / "state.rnta"));
  const Generator g = load_generator(dir);
  EXPECT_EQ(g.parameters().snapshot(), t.generator().parameters().snapshot());
}

TEST(Train, DeterministicAndCheckpointsAreReproducible) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  Trainer t1(tiny_config()), t2(tiny_config());
  const auto l1 = t1.train(manifest(), {a, {}});
  const auto l2 = t2.train(manifest(), {b, {}});
  ASSERT_EQ(l1.size(), 3u * manifest().size());
  EXPECT_EQ(loss_log_csv(l1), loss_log_csv(l2));
  EXPECT_EQ(slurp(a / "state.rnta"), slurp(b / "state.rnta"));
  EXPECT_EQ(slurp(a / "config.txt"), slurp(b / "config.txt"));
  EXPECT_EQ(l1.front().lr, 1e-4);
  EXPECT_LT(l1.back().lr, 1e-4);
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  TrainingConfig c = tiny_config();
  c.checkpoint_interval = 4;
  Trainer full(c);
  const auto reference = full.train(manifest(), {std::nullopt, {}});

  const fs::path dir = scratch("resume");
  struct Stop {};
  Trainer first(c);
  try {
    first.train(manifest(), {dir, [](const LogRow& r) {
                               if (r.step == 6) throw Stop{};
                             }});
    FAIL();
  } catch (const Stop&) {
  }
  Trainer second(c);
  second.load_checkpoint(dir);
  ASSERT_EQ(second.state().step, 4);
  const auto rest = second.train(manifest(), {std::nullopt, {}});
  ASSERT_EQ(rest.size(), reference.size() - 4);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const LogRow& a = rest[i];
    const LogRow& b = reference[i + 4];
    EXPECT_EQ(a.step, b.step);
    EXPECT_EQ(a.lr, b.lr);
    EXPECT_EQ(a.generator.total, b.generator.total);
    EXPECT_EQ(a.generator.content, b.generator.content);
    EXPECT_EQ(a.discriminator, b.discriminator);
  }
  EXPECT_EQ(second.generator().parameters().snapshot(), full.generator().parameters().snapshot());
  EXPECT_EQ(second.state().running_generator.total, full.state().running_generator.total);
}

TEST(Train, MismatchedCheckpointIsRejected) {
  const fs::path dir = scratch("mismatch");
  TrainingConfig c = tiny_config();
  c.total_epochs = 0;
  c.decay_start_epoch = 0;
  Trainer(c).save_checkpoint(dir);
  TrainingConfig other = tiny_config();
  other.generator.lateral_channels = 6;
  Trainer t(other);
  EXPECT_THROW(t.load_checkpoint(dir), ShapeError);
  EXPECT_THROW(load_generator(scratch("empty_ckpt")), IoError);
}

TEST(Train, UnsatisfiableScenario) {
  TrainingConfig c = tiny_config();
  c.scenario.kind = ScenarioKind::kOneToOne;
  c.scenario.identity = "id999";
  Trainer t(c);
  EXPECT_THROW(t.train(manifest(), {}), InvalidArgument);
}

TEST(LossLog, CsvHeader) {
  const std::vector<LogRow> rows{{1, 1e-4, {1, 2, 3, 4}, 5}};
  const std::string csv = loss_log_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,lr,L_identity,L_content,L_adv,L_total,L_D");
  EXPECT_NE(csv.find("1,1e-04,1,2,3,4,5"), std::string::npos) << csv;
}

}  // namespace
}  // namespace reenact

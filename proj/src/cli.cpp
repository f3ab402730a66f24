// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/cli.hpp"

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reenact/config.hpp"
#include "reenact/data.hpp"
#include "reenact/errors.hpp"
#include "reenact/geometry.hpp"
#include "reenact/image_io.hpp"
#include "reenact/metrics.hpp"
#include "reenact/training.hpp"

namespace reenact::cli {
namespace {

namespace fs = std::filesystem;

void print_digest(std::ostream& out, const KeyValueConfig& kv) {
  out << "config digest: " << kv.digest() << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw IoError("cannot write " + path.string());
}

fs::path with_suffix(fs::path p, const std::string& ext) { return p.replace_extension(ext); }

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int identities = 4;
  int expressions = 3;
  int size = 64;
  std::uint64_t seed = 0;
  bool no_jitter = false;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  KeyValueConfig kv;
  kv.set("synth.identities", std::to_string(a.identities));
  kv.set("synth.expressions", std::to_string(a.expressions));
  kv.set("synth.size", std::to_string(a.size));
  kv.set("synth.seed", std::to_string(a.seed));
  kv.set("synth.pose_jitter", a.no_jitter ? "false" : "true");
  print_digest(out, kv);
  SynthOptions opt;
  opt.size = a.size;
  opt.pose_jitter = !a.no_jitter;
  const DatasetManifest m = build_synthetic_manifest(a.identities, a.expressions, a.out, a.seed, opt);
  out << "wrote " << m.size() << " faces to " << (fs::path(a.out) / "manifest.jsonl").string() << '\n';
  return kOk;
}

// ---- align ----------------------------------------------------------------

struct AlignArgs {
  std::string input, landmarks, out, out_landmarks;
  int size = 256;
  double max_residual = -1.0;
};

int do_align(const AlignArgs& a, std::ostream& out) {
  KeyValueConfig kv;
  kv.set("align.size", std::to_string(a.size));
  kv.set("align.max_residual", format_double(a.max_residual));
  print_digest(out, kv);
  const Tensor image = read_png(a.input);
  const LandmarkSet lm = read_landmarks(a.landmarks);
  std::optional<double> limit;
  if (a.max_residual >= 0.0) limit = a.max_residual;
  const NormalizedFace face = normalize_face(image, lm, AnchorTemplate::standard(a.size), limit);
  write_png(a.out, face.image);
  const fs::path lm_out = a.out_landmarks.empty() ? with_suffix(a.out, ".json") : fs::path(a.out_landmarks);
  write_landmarks(lm_out, face.landmarks);
  char line[96];
  std::snprintf(line, sizeof line, "anchor residual: %.4f px\n", face.anchor_residual);
  out << line;
  return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string manifest, checkpoint, config, log;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs, decay_start, pairs_per_epoch, size, lateral, interval, batch;
  std::optional<double> lr, lr_final;
  std::optional<std::string> scenario, identity, source_identity, target_identity;
  bool share_encoders = false;
  bool zero_output = false;
  bool resume = false;
};

TrainingConfig resolve_training_config(const TrainArgs& a) {
  TrainingConfig cfg;
  const bool from_file = !a.config.empty();
  if (from_file) cfg = TrainingConfig::from_kv(KeyValueConfig::load(a.config));
  if (a.seed || !from_file) cfg.apply_seed(a.seed.value_or(cfg.seed));
  if (a.epochs) cfg.total_epochs = *a.epochs;
  if (a.decay_start) {
    cfg.decay_start_epoch = *a.decay_start;
  } else if (cfg.total_epochs > 0 && cfg.decay_start_epoch >= cfg.total_epochs) {
    // Keep the default 40/100 proportion for short runs.
    cfg.decay_start_epoch = (cfg.total_epochs * 2) / 5;
  }
  if (a.pairs_per_epoch) cfg.pairs_per_epoch = *a.pairs_per_epoch;
  if (a.size) cfg.generator.crop_size = *a.size;
  if (a.lateral) cfg.generator.lateral_channels = *a.lateral;
  if (a.interval) cfg.checkpoint_interval = *a.interval;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.lr) cfg.lr_initial = *a.lr;
  if (a.lr_final) cfg.lr_final = *a.lr_final;
  if (a.share_encoders) cfg.generator.share_encoders = true;
  if (a.scenario) cfg.scenario.kind = parse_scenario(*a.scenario);
  if (a.identity) cfg.scenario.identity = *a.identity;
  if (a.source_identity) cfg.scenario.source_identity = *a.source_identity;
  if (a.target_identity) cfg.scenario.target_identity = *a.target_identity;
  cfg.validate();
  return cfg;
}

int do_train(const TrainArgs& a, std::ostream& out) {
  const TrainingConfig cfg = resolve_training_config(a);
  print_digest(out, cfg.to_kv());
  const DatasetManifest manifest = load_manifest(a.manifest);
  cfg.scenario.validate(manifest);

  Trainer trainer(cfg);
  const fs::path dir = a.checkpoint;
  if (a.resume && fs::exists(dir / "meta.json")) {
    trainer.load_checkpoint(dir);
    out << "resumed at step " << trainer.state().step << '\n';
  } else if (a.zero_output) {
    trainer.generator().zero_output_projection();
  }

  const fs::path log_path = a.log.empty() ? dir / "loss_log.csv" : fs::path(a.log);
  Trainer::RunOptions opt;
  opt.checkpoint_dir = dir;
  const auto rows = trainer.train(manifest, opt);
  write_text(log_path, loss_log_csv(rows));
  if (!rows.empty()) {
    const LogRow& last = rows.back();
    char line[160];
    std::snprintf(line, sizeof line, "step %lld  L_total %.6g  L_content %.6g  L_D %.6g\n", last.step,
                  last.generator.total, last.generator.content, last.discriminator);
    out << line;
  }
  out << "checkpoint: " << dir.string() << " (step " << trainer.state().step << ")\n";
  return kOk;
}

// ---- reenact --------------------------------------------------------------

struct ReenactArgs {
  std::string source, source_landmarks, target, target_landmarks, checkpoint, out, triptych;
  bool align = false;
};

int do_reenact(const ReenactArgs& a, std::ostream& out) {
  const TrainingConfig cfg = read_checkpoint_config(a.checkpoint);
  KeyValueConfig kv = cfg.to_kv();
  kv.set("reenact.align", a.align ? "true" : "false");
  print_digest(out, kv);
  const Generator g = load_generator(a.checkpoint);
  const int n = cfg.generator.crop_size;

  Tensor src = read_png(a.source);
  Tensor tgt = read_png(a.target);
  const LandmarkSet src_lm = read_landmarks(a.source_landmarks);
  if (a.align) {
    if (a.target_landmarks.empty()) throw InvalidArgument("--align needs --target-landmarks");
    const AnchorTemplate tmpl = AnchorTemplate::standard(n);
    src = normalize_face(src, src_lm, tmpl).image;
    tgt = normalize_face(tgt, read_landmarks(a.target_landmarks), tmpl).image;
  }
  require_shape(src, {3, n, n}, "source image (use --align for unaligned inputs)");
  require_shape(tgt, {3, n, n}, "target image (use --align for unaligned inputs)");

  const Tensor result = g.generate(src, tgt);
  write_png(a.out, result);
  if (!a.triptych.empty()) {
    const std::vector<Tensor> row{tgt, result, src};
    write_png(a.triptych, hconcat(row));
  }
  out << "wrote " << a.out << '\n';
  return kOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvalArgs {
  std::string manifest, checkpoint, out;
  std::optional<std::string> scenario, identity, source_identity, target_identity;
  int pairs = 32;
  std::optional<std::uint64_t> seed;
  bool self_pairs = false;
};

int do_evaluate(const EvalArgs& a, std::ostream& out) {
  const TrainingConfig cfg = read_checkpoint_config(a.checkpoint);
  ScenarioSpec spec = cfg.scenario;
  if (a.scenario) spec.kind = parse_scenario(*a.scenario);
  if (a.identity) spec.identity = *a.identity;
  if (a.source_identity) spec.source_identity = *a.source_identity;
  if (a.target_identity) spec.target_identity = *a.target_identity;
  const std::uint64_t seed = a.seed.value_or(cfg.seed);

  KeyValueConfig kv = cfg.to_kv();
  kv.set("eval.scenario", std::string(scenario_name(spec.kind)));
  kv.set("eval.identity", spec.identity);
  kv.set("eval.source_identity", spec.source_identity);
  kv.set("eval.target_identity", spec.target_identity);
  kv.set("eval.pairs", std::to_string(a.pairs));
  kv.set("eval.seed", std::to_string(seed));
  kv.set("eval.self_pairs", a.self_pairs ? "true" : "false");
  print_digest(out, kv);

  const DatasetManifest manifest = load_manifest(a.manifest);
  const Generator g = load_generator(a.checkpoint);
  const AnchorTemplate tmpl = AnchorTemplate::standard(cfg.generator.crop_size);

  std::vector<NormalizedFace> faces;
  NearestReferenceDetector detector;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    faces.push_back(load_normalized(manifest, i, tmpl));
    detector.add(faces.back().image, faces.back().landmarks);
  }

  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  if (a.self_pairs) {
    for (std::size_t i = 0; i < manifest.size(); ++i) chosen.emplace_back(i, i);
  } else {
    spec.validate(manifest);
    chosen = enumerate_pairs(manifest, spec);
    if (chosen.empty()) {
      throw InvalidArgument("manifest has no pairs for scenario " + std::string(scenario_name(spec.kind)));
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[rng() % i]);
  }
  if (a.pairs > 0 && chosen.size() > static_cast<std::size_t>(a.pairs)) chosen.resize(a.pairs);

  std::vector<EvalPair> pairs;
  for (const auto& [s, t] : chosen) {
    const ManifestEntry& es = manifest.entries[s];
    const ManifestEntry& et = manifest.entries[t];
    pairs.push_back({es.identity_id + "_" + es.expression_id + "->" + et.identity_id + "_" + et.expression_id,
                     faces[s].image, faces[s].landmarks, faces[t].image});
  }

  const auto embedder = make_extractor(cfg.identity_extractor, cfg.extractor_seed);
  const EvalReport report = evaluate_pairs(
      pairs, [&g](const Tensor& s, const Tensor& t) { return g.generate(s, t); }, detector, *embedder,
      *embedder, spec.kind);
  write_text(a.out, report.to_json() + "\n");
  out << report.table();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"One-shot face reenactment toolkit", "facereenact"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Render a synthetic face dataset with exact landmarks");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--identities", synth.identities, "Number of identities")->check(CLI::PositiveNumber);
  s->add_option("--expressions", synth.expressions, "Expressions per identity")->check(CLI::PositiveNumber);
  s->add_option("--size", synth.size, "Canvas size in pixels")->check(CLI::Range(16, 4096));
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_flag("--no-jitter", synth.no_jitter, "Disable per-face pose jitter");

  AlignArgs align;
  auto* al = app.add_subcommand("align", "Normalize a face to the anchor template");
  al->add_option("--input", align.input, "Input PNG")->required()->check(CLI::ExistingFile);
  al->add_option("--landmarks", align.landmarks, "Landmark JSON")->required()->check(CLI::ExistingFile);
  al->add_option("--out", align.out, "Output PNG")->required();
  al->add_option("--out-landmarks", align.out_landmarks, "Output landmark JSON (default: next to --out)");
  al->add_option("--size", align.size, "Crop size N")->check(CLI::Range(8, 4096));
  al->add_option("--max-residual", align.max_residual, "Fail when an anchor lands farther than this (px)");

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Adversarial training on a manifest");
  tr->add_option("--manifest", train.manifest, "manifest.jsonl")->required();
  tr->add_option("--checkpoint", train.checkpoint, "Checkpoint directory")->required();
  tr->add_option("--config", train.config, "Key-value config file")->check(CLI::ExistingFile);
  tr->add_option("--seed", train.seed, "Master seed");
  tr->add_option("--epochs", train.epochs, "Total epochs")->check(CLI::NonNegativeNumber);
  tr->add_option("--decay-start", train.decay_start, "Epoch where linear decay starts");
  tr->add_option("--pairs-per-epoch", train.pairs_per_epoch, "Pairs per epoch (default: manifest size)");
  tr->add_option("--batch", train.batch, "Pairs per step");
  tr->add_option("--size", train.size, "Crop size N");
  tr->add_option("--lateral-channels", train.lateral, "FPN channel width d");
  tr->add_option("--checkpoint-interval", train.interval, "Steps between checkpoints");
  tr->add_option("--lr", train.lr, "Initial learning rate");
  tr->add_option("--lr-final", train.lr_final, "Final learning rate");
  tr->add_option("--scenario", train.scenario, "many-to-many | one-to-one | one-to-another");
  tr->add_option("--identity", train.identity, "Identity for one-to-one");
  tr->add_option("--source-identity", train.source_identity, "Source identity for one-to-another");
  tr->add_option("--target-identity", train.target_identity, "Target identity for one-to-another");
  tr->add_option("--log", train.log, "Loss log CSV (default: <checkpoint>/loss_log.csv)");
  tr->add_flag("--share-encoders", train.share_encoders, "One encoder for source and target");
  tr->add_flag("--zero-output", train.zero_output, "Zero the final projection (identity generator)");
  tr->add_flag("--resume", train.resume, "Continue from the checkpoint directory if present");

  ReenactArgs re;
  auto* rn = app.add_subcommand("reenact", "Transfer the source expression onto the target");
  rn->add_option("--source", re.source, "Source PNG")->required()->check(CLI::ExistingFile);
  rn->add_option("--source-landmarks", re.source_landmarks, "Source landmark JSON")
      ->required()
      ->check(CLI::ExistingFile);
  rn->add_option("--target", re.target, "Target PNG")->required()->check(CLI::ExistingFile);
  rn->add_option("--target-landmarks", re.target_landmarks, "Target landmark JSON (with --align)");
  rn->add_option("--checkpoint", re.checkpoint, "Checkpoint directory")->required();
  rn->add_option("--out", re.out, "Output PNG")->required();
  rn->add_option("--triptych", re.triptych, "Also write target|output|source PNG");
  rn->add_flag("--align", re.align, "Normalize inputs before generating");

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint with FID, NMSE and CSIM");
  e->add_option("--manifest", ev.manifest, "manifest.jsonl")->required();
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
  e->add_option("--out", ev.out, "Report JSON")->required();
  e->add_option("--scenario", ev.scenario, "Scenario (default: checkpoint's)");
  e->add_option("--identity", ev.identity, "Identity for one-to-one");
  e->add_option("--source-identity", ev.source_identity, "Source identity for one-to-another");
  e->add_option("--target-identity", ev.target_identity, "Target identity for one-to-another");
  e->add_option("--pairs", ev.pairs, "Maximum pairs (0 = all)")->check(CLI::NonNegativeNumber);
  e->add_option("--seed", ev.seed, "Pair selection seed (default: checkpoint's)");
  e->add_flag("--self-pairs", ev.self_pairs, "Evaluate (x, x) pairs instead of scenario pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return do_synth(synth, out);
    if (*al) return do_align(align, out);
    if (*tr) return do_train(train, out);
    if (*rn) return do_reenact(re, out);
    if (*e) return do_evaluate(ev, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace reenact::cli

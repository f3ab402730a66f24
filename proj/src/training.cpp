// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/training.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "reenact/errors.hpp"

namespace reenact {
namespace {

constexpr const char* kParamsFile = "state.rnta";
constexpr const char* kConfigFile = "config.txt";
constexpr const char* kMetaFile = "meta.json";

// splitmix64; keeps derived seeds below 2^53 so they survive the text config.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return (z ^ (z >> 31)) & ((1ULL << 53) - 1);
}

std::uint64_t get_seed(const KeyValueConfig& kv, const std::string& key, std::uint64_t fallback) {
  const long long v = kv.get_int(key, static_cast<long long>(fallback));
  if (v < 0) throw InvalidArgument("config: " + key + " must be non-negative");
  return static_cast<std::uint64_t>(v);
}

void check_finite(double v, const char* term, long long step) {
  if (!std::isfinite(v)) {
    throw TrainingError(std::string("non-finite ") + term + " loss at step " + std::to_string(step));
  }
}

TensorMap with_prefix(const std::map<std::string, Tensor>& m, const std::string& prefix) {
  TensorMap out;
  for (const auto& [k, v] : m) out.emplace(prefix + k, v);
  return out;
}

std::map<std::string, Tensor> strip_prefix(const TensorMap& m, const std::string& prefix) {
  std::map<std::string, Tensor> out;
  for (const auto& [k, v] : m) {
    if (k.compare(0, prefix.size(), prefix) == 0) out.emplace(k.substr(prefix.size()), v);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Restores requires_grad on the discriminator even if a step throws.
struct FreezeGuard {
  const ParameterSet& params;
  explicit FreezeGuard(const ParameterSet& p) : params(p) { params.set_requires_grad(false); }
  ~FreezeGuard() { params.set_requires_grad(true); }
};

}  // namespace

void TrainingConfig::validate() const {
  if (!(lr_initial > 0.0) || !(lr_final >= 0.0) || lr_final > lr_initial) {
    throw InvalidArgument("training: need 0 <= lr_final <= lr_initial and lr_initial > 0");
  }
  if (total_epochs < 0) throw InvalidArgument("training: total_epochs must be >= 0");
  if (decay_start_epoch < 0) throw InvalidArgument("training: decay_start_epoch must be >= 0");
  if (total_epochs > 0 && decay_start_epoch >= total_epochs) {
    throw InvalidArgument("training: decay_start_epoch must be < total_epochs");
  }
  if (batch_size < 1) throw InvalidArgument("training: batch_size must be >= 1");
  if (pairs_per_epoch < 0) throw InvalidArgument("training: pairs_per_epoch must be >= 0");
  if (checkpoint_interval < 0) throw InvalidArgument("training: checkpoint_interval must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0)) {
    throw InvalidArgument("training: Adam needs beta in [0, 1) and eps > 0");
  }
  if (!(boundary_line_width > 0.0)) throw InvalidArgument("training: boundary_line_width must be > 0");
  weights.validate();
  generator.validate();
  discriminator.validate();
}

void TrainingConfig::apply_seed(std::uint64_t master_seed) {
  seed = master_seed;
  generator.seed = derive_seed(master_seed, 1);
  discriminator.seed = derive_seed(master_seed, 2);
  scenario.seed = derive_seed(master_seed, 3);
  extractor_seed = derive_seed(master_seed, 4);
}

KeyValueConfig TrainingConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("train.lr_initial", format_double(lr_initial));
  kv.set("train.lr_final", format_double(lr_final));
  kv.set("train.decay_start_epoch", std::to_string(decay_start_epoch));
  kv.set("train.total_epochs", std::to_string(total_epochs));
  kv.set("train.batch_size", std::to_string(batch_size));
  kv.set("train.pairs_per_epoch", std::to_string(pairs_per_epoch));
  kv.set("train.checkpoint_interval", std::to_string(checkpoint_interval));
  kv.set("train.seed", std::to_string(seed));
  kv.set("train.boundary_line_width", format_double(boundary_line_width));
  kv.set("adam.beta1", format_double(adam.beta1));
  kv.set("adam.beta2", format_double(adam.beta2));
  kv.set("adam.eps", format_double(adam.eps));
  kv.set("loss.content", format_double(weights.content));
  kv.set("loss.adversarial", format_double(weights.adversarial));
  kv.set("loss.identity", format_double(weights.identity));
  kv.set("extractor.identity", identity_extractor);
  kv.set("extractor.content", content_extractor);
  kv.set("extractor.seed", std::to_string(extractor_seed));
  kv.set("scenario.kind", std::string(scenario_name(scenario.kind)));
  kv.set("scenario.identity", scenario.identity);
  kv.set("scenario.source_identity", scenario.source_identity);
  kv.set("scenario.target_identity", scenario.target_identity);
  kv.set("scenario.seed", std::to_string(scenario.seed));
  generator.write_to(kv);
  discriminator.write_to(kv);
  return kv;
}

TrainingConfig TrainingConfig::from_kv(const KeyValueConfig& kv) {
  TrainingConfig c;
  c.lr_initial = kv.get_double("train.lr_initial", c.lr_initial);
  c.lr_final = kv.get_double("train.lr_final", c.lr_final);
  c.decay_start_epoch = static_cast<int>(kv.get_int("train.decay_start_epoch", c.decay_start_epoch));
  c.total_epochs = static_cast<int>(kv.get_int("train.total_epochs", c.total_epochs));
  c.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.batch_size));
  c.pairs_per_epoch = static_cast<int>(kv.get_int("train.pairs_per_epoch", c.pairs_per_epoch));
  c.checkpoint_interval = static_cast<int>(kv.get_int("train.checkpoint_interval", c.checkpoint_interval));
  c.seed = get_seed(kv, "train.seed", c.seed);
  c.boundary_line_width = kv.get_double("train.boundary_line_width", c.boundary_line_width);
  c.adam.beta1 = kv.get_double("adam.beta1", c.adam.beta1);
  c.adam.beta2 = kv.get_double("adam.beta2", c.adam.beta2);
  c.adam.eps = kv.get_double("adam.eps", c.adam.eps);
  c.weights.content = kv.get_double("loss.content", c.weights.content);
  c.weights.adversarial = kv.get_double("loss.adversarial", c.weights.adversarial);
  c.weights.identity = kv.get_double("loss.identity", c.weights.identity);
  c.identity_extractor = kv.get_string("extractor.identity", c.identity_extractor);
  c.content_extractor = kv.get_string("extractor.content", c.content_extractor);
  c.extractor_seed = get_seed(kv, "extractor.seed", c.extractor_seed);
  c.scenario.kind = parse_scenario(kv.get_string("scenario.kind", std::string(scenario_name(c.scenario.kind))));
  c.scenario.identity = kv.get_string("scenario.identity", "");
  c.scenario.source_identity = kv.get_string("scenario.source_identity", "");
  c.scenario.target_identity = kv.get_string("scenario.target_identity", "");
  c.scenario.seed = get_seed(kv, "scenario.seed", c.scenario.seed);
  c.generator = GeneratorConfig::read_from(kv);
  c.discriminator = DiscriminatorConfig::read_from(kv);
  return c;
}

double lr_schedule(double epoch, const TrainingConfig& cfg) {
  if (epoch <= cfg.decay_start_epoch || cfg.total_epochs <= cfg.decay_start_epoch) return cfg.lr_initial;
  const double span = static_cast<double>(cfg.total_epochs - cfg.decay_start_epoch);
  const double t = std::min(1.0, (epoch - cfg.decay_start_epoch) / span);
  return cfg.lr_initial + t * (cfg.lr_final - cfg.lr_initial);
}

// ---------------------------------------------------------------------------

Adam::Adam(ParameterSet params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const auto& [name, v] : params_.entries()) {
    m_.emplace_back(v.shape());
    v_.emplace_back(v.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const auto& entries = params_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Var p = entries[i].second;
    if (!p.has_grad()) continue;
    const auto g = p.grad().values();
    auto w = p.mutable_value().values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
    }
  }
}

TensorMap Adam::state(const std::string& prefix) const {
  TensorMap out;
  const auto& entries = params_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out.emplace(prefix + "m/" + entries[i].first, m_[i]);
    out.emplace(prefix + "v/" + entries[i].first, v_[i]);
  }
  return out;
}

void Adam::load_state(const TensorMap& tensors, const std::string& prefix, long long steps) {
  const auto& entries = params_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (const auto& [slot, tag] : {std::pair{&m_[i], "m/"}, std::pair{&v_[i], "v/"}}) {
      const std::string key = prefix + tag + entries[i].first;
      const auto it = tensors.find(key);
      if (it == tensors.end()) throw ShapeError("optimizer state missing " + key);
      require_shape(it->second, slot->shape(), key);
      *slot = it->second;
    }
  }
  t_ = steps;
}

std::string loss_log_csv(std::span<const LogRow> rows) {
  std::ostringstream os;
  os << "step,lr,L_identity,L_content,L_adv,L_total,L_D\n";
  for (const LogRow& r : rows) {
    os << r.step << ',' << format_double(r.lr) << ',' << format_double(r.generator.identity) << ','
       << format_double(r.generator.content) << ',' << format_double(r.generator.adversarial) << ','
       << format_double(r.generator.total) << ',' << format_double(r.discriminator) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

Trainer::Trainer(TrainingConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      generator_(cfg_.generator),
      discriminator_(cfg_.discriminator),
      identity_(make_extractor(cfg_.identity_extractor, cfg_.extractor_seed)),
      content_(make_extractor(cfg_.content_extractor, cfg_.extractor_seed + 1)),
      adam_g_(generator_.parameters(), cfg_.adam),
      adam_d_(discriminator_.parameters(), cfg_.adam) {}

StepResult Trainer::train_step(std::span<const TrainingSample> batch, double lr) {
  if (batch.empty()) throw InvalidArgument("train_step: empty batch");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("train_step: lr must be finite and >= 0");
  const int n = cfg_.generator.crop_size;
  const long long step = state_.step + 1;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<Var> sources, targets, maps, fakes;
  for (const TrainingSample& s : batch) {
    require_shape(s.source, {3, n, n}, "train_step source");
    require_shape(s.target, {3, n, n}, "train_step target");
    sources.emplace_back(s.source);
    targets.emplace_back(s.target);
    maps.emplace_back(render_boundary_map(s.source_landmarks, n, cfg_.discriminator.condition_channels,
                                          cfg_.boundary_line_width)
                          .channels);
    fakes.push_back(generator_.generate(sources.back(), targets.back()));
  }

  // Discriminator half-step: fakes detached, so no generator gradients.
  const ParameterSet& dparams = discriminator_.parameters();
  dparams.zero_grad();
  double d_loss = 0.0;
  {
    std::vector<Var> real_scores, fake_scores;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      real_scores.push_back(discriminator_.score(sources[b], maps[b]));
      fake_scores.push_back(discriminator_.score(fakes[b].detach(), maps[b]));
    }
    Var ld = ralsgan_discriminator_loss(ops::concat_flat(real_scores), ops::concat_flat(fake_scores));
    d_loss = ld.value().item();
    check_finite(d_loss, "discriminator", step);
    ld.backward();
    adam_d_.step(lr);
  }

  // Generator half-step through a frozen discriminator.
  const ParameterSet& gparams = generator_.parameters();
  gparams.zero_grad();
  LossBreakdown g;
  {
    FreezeGuard freeze(dparams);
    std::vector<Var> real_scores, fake_scores;
    Var content, identity;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      real_scores.push_back(discriminator_.score(sources[b], maps[b]));
      fake_scores.push_back(discriminator_.score(fakes[b], maps[b]));
      Var c = ops::mul_scalar(perceptual_loss(*content_, fakes[b], targets[b]), inv_b);
      Var id = ops::mul_scalar(
          identity_loss(identity_->extract(fakes[b]), identity_->extract(targets[b])), inv_b);
      content = content.defined() ? ops::add(content, c) : c;
      identity = identity.defined() ? ops::add(identity, id) : id;
    }
    Var adv = ralsgan_generator_loss(ops::concat_flat(real_scores), ops::concat_flat(fake_scores));
    g.identity = identity.value().item();
    g.content = content.value().item();
    g.adversarial = adv.value().item();
    check_finite(g.identity, "identity", step);
    check_finite(g.content, "content", step);
    check_finite(g.adversarial, "adversarial", step);
    Var total = total_loss(identity, content, adv, cfg_.weights);
    g.total = total.value().item();
    check_finite(g.total, "total", step);
    total.backward();
    adam_g_.step(lr);
  }
  dparams.zero_grad();

  const double k = static_cast<double>(state_.step);
  auto running = [k](double avg, double x) { return (avg * k + x) / (k + 1.0); };
  state_.running_generator.identity = running(state_.running_generator.identity, g.identity);
  state_.running_generator.content = running(state_.running_generator.content, g.content);
  state_.running_generator.adversarial = running(state_.running_generator.adversarial, g.adversarial);
  state_.running_generator.total = running(state_.running_generator.total, g.total);
  state_.running_discriminator = running(state_.running_discriminator, d_loss);
  state_.step = step;
  return {g, d_loss};
}

std::vector<LogRow> Trainer::train(const DatasetManifest& manifest, const RunOptions& options) {
  std::vector<LogRow> log;
  const long long pairs = cfg_.pairs_per_epoch > 0 ? cfg_.pairs_per_epoch
                                                   : static_cast<long long>(manifest.size());
  const long long steps_per_epoch = std::max(1LL, pairs / cfg_.batch_size);
  const long long total_steps = steps_per_epoch * cfg_.total_epochs;

  if (state_.step < total_steps) {
    if (manifest.size() == 0) throw InvalidArgument("train: empty manifest");
    cfg_.scenario.validate(manifest);
    PairSampler sampler(manifest, cfg_.scenario);
    if (sampler.support().empty()) {
      throw InvalidArgument("train: manifest has no pairs for scenario " +
                            std::string(scenario_name(cfg_.scenario.kind)));
    }
    if (!state_.sampler_state.empty()) sampler.restore_state(state_.sampler_state);

    const AnchorTemplate tmpl = anchor_template();
    std::vector<std::optional<NormalizedFace>> cache(manifest.size());
    auto face = [&](std::size_t i) -> const NormalizedFace& {
      if (!cache[i]) cache[i] = load_normalized(manifest, i, tmpl);
      return *cache[i];
    };

    while (state_.step < total_steps) {
      state_.epoch = state_.step / steps_per_epoch;
      const double lr = lr_schedule(static_cast<double>(state_.epoch), cfg_);
      std::vector<TrainingSample> batch;
      for (int b = 0; b < cfg_.batch_size; ++b) {
        const auto [si, ti] = sampler.next();
        const NormalizedFace& src = face(si);
        batch.push_back({src.image, face(ti).image, src.landmarks});
      }
      const StepResult r = train_step(batch, lr);
      state_.sampler_state = sampler.save_state();
      log.push_back({state_.step, lr, r.generator, r.discriminator});
      if (options.on_step) options.on_step(log.back());
      if (options.checkpoint_dir && cfg_.checkpoint_interval > 0 &&
          state_.step % cfg_.checkpoint_interval == 0) {
        state_.epoch = state_.step / steps_per_epoch;
        save_checkpoint(*options.checkpoint_dir);
      }
    }
  }
  state_.epoch = state_.step / steps_per_epoch;
  if (options.checkpoint_dir) save_checkpoint(*options.checkpoint_dir);
  return log;
}

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  TensorMap tensors = with_prefix(generator_.parameters().snapshot(), "generator/");
  tensors.merge(with_prefix(discriminator_.parameters().snapshot(), "discriminator/"));
  tensors.merge(adam_g_.state("adam_g/"));
  tensors.merge(adam_d_.state("adam_d/"));
  write_archive(dir / kParamsFile, tensors);

  {
    std::ofstream os(dir / kConfigFile, std::ios::binary);
    os << cfg_.to_kv().dump();
    if (!os) throw IoError("cannot write " + (dir / kConfigFile).string());
  }

  nlohmann::ordered_json meta;
  meta["epoch"] = state_.epoch;
  meta["step"] = state_.step;
  meta["config_digest"] = cfg_.digest();
  meta["rng_state"] = state_.sampler_state;
  meta["adam_steps"] = {{"generator", adam_g_.steps()}, {"discriminator", adam_d_.steps()}};
  meta["running"] = {{"identity", state_.running_generator.identity},
                     {"content", state_.running_generator.content},
                     {"adversarial", state_.running_generator.adversarial},
                     {"total", state_.running_generator.total},
                     {"discriminator", state_.running_discriminator}};
  meta["timestamp"] = utc_timestamp();
  std::ofstream os(dir / kMetaFile, std::ios::binary);
  os << meta.dump(2) << '\n';
  if (!os) throw IoError("cannot write " + (dir / kMetaFile).string());
}

void Trainer::load_checkpoint(const std::filesystem::path& dir) {
  // Shapes are checked per parameter; a config with different widths fails there.
  read_checkpoint_config(dir);
  const TensorMap tensors = read_archive(dir / kParamsFile);
  generator_.parameters().load(strip_prefix(tensors, "generator/"));
  discriminator_.parameters().load(strip_prefix(tensors, "discriminator/"));

  std::ifstream is(dir / kMetaFile);
  if (!is) throw IoError("cannot read " + (dir / kMetaFile).string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(is);
    adam_g_.load_state(tensors, "adam_g/", meta.at("adam_steps").at("generator").get<long long>());
    adam_d_.load_state(tensors, "adam_d/", meta.at("adam_steps").at("discriminator").get<long long>());
    state_.epoch = meta.at("epoch").get<long long>();
    state_.step = meta.at("step").get<long long>();
    state_.sampler_state = meta.at("rng_state").get<std::string>();
    const auto& run = meta.at("running");
    state_.running_generator.identity = run.at("identity").get<double>();
    state_.running_generator.content = run.at("content").get<double>();
    state_.running_generator.adversarial = run.at("adversarial").get<double>();
    state_.running_generator.total = run.at("total").get<double>();
    state_.running_discriminator = run.at("discriminator").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint metadata " + (dir / kMetaFile).string() + ": " + e.what());
  }
}

TrainingConfig read_checkpoint_config(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("checkpoint directory not found: " + dir.string());
  return TrainingConfig::from_kv(KeyValueConfig::load(dir / kConfigFile));
}

Generator load_generator(const std::filesystem::path& dir) {
  const TrainingConfig cfg = read_checkpoint_config(dir);
  Generator g(cfg.generator);
  g.parameters().load(strip_prefix(read_archive(dir / kParamsFile), "generator/"));
  return g;
}

}  // namespace reenact

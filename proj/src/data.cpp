// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "reenact/errors.hpp"
#include "reenact/image_io.hpp"

namespace reenact {

std::string_view scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kManyToMany: return "many-to-many";
    case ScenarioKind::kOneToOne: return "one-to-one";
    case ScenarioKind::kOneToAnother: return "one-to-another";
  }
  return "unknown";
}

ScenarioKind parse_scenario(std::string_view name) {
  if (name == "many-to-many") return ScenarioKind::kManyToMany;
  if (name == "one-to-one") return ScenarioKind::kOneToOne;
  if (name == "one-to-another") return ScenarioKind::kOneToAnother;
  throw InvalidArgument("unknown scenario '" + std::string(name) + "'");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest row " + std::to_string(row);
    ManifestEntry e;
    try {
      const auto j = nlohmann::json::parse(line);
      e.image_path = j.at("image_path").get<std::string>();
      e.identity_id = j.at("identity_id").get<std::string>();
      e.expression_id = j.at("expression_id").get<std::string>();
      e.landmarks_path = j.at("landmarks_path").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw IoError(where + ": malformed entry (" + ex.what() + ")");
    }
    if (!std::filesystem::exists(m.root / e.image_path)) {
      throw IoError(where + ": missing image " + e.image_path);
    }
    if (!std::filesystem::exists(m.root / e.landmarks_path)) {
      throw IoError(where + ": missing landmarks " + e.landmarks_path);
    }
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw IoError("empty manifest: " + path.string());
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write manifest " + path.string());
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json j;
    j["image_path"] = e.image_path;
    j["identity_id"] = e.identity_id;
    j["expression_id"] = e.expression_id;
    j["landmarks_path"] = e.landmarks_path;
    os << j.dump() << '\n';
  }
}

void ScenarioSpec::validate(const DatasetManifest& manifest) const {
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) ids.insert(e.identity_id);
  auto require = [&](const std::string& id, const char* role) {
    if (id.empty()) {
      throw InvalidArgument(std::string(scenario_name(kind)) + " scenario needs a " + role + " identity");
    }
    if (!ids.count(id)) throw InvalidArgument("identity '" + id + "' is not in the manifest");
  };
  switch (kind) {
    case ScenarioKind::kManyToMany:
      if (ids.size() < 2) throw InvalidArgument("many-to-many needs at least two identities");
      break;
    case ScenarioKind::kOneToOne: require(identity, "fixed"); break;
    case ScenarioKind::kOneToAnother:
      require(source_identity, "source");
      require(target_identity, "target");
      if (source_identity == target_identity) {
        throw InvalidArgument("one-to-another needs distinct source and target identities");
      }
      break;
  }
}

bool pair_allowed(const ScenarioSpec& spec, const ManifestEntry& source, const ManifestEntry& target) {
  const bool expr_differs = source.expression_id != target.expression_id;
  switch (spec.kind) {
    case ScenarioKind::kManyToMany:
      return source.identity_id != target.identity_id && expr_differs;
    case ScenarioKind::kOneToOne:
      return source.identity_id == spec.identity && target.identity_id == spec.identity && expr_differs;
    case ScenarioKind::kOneToAnother:
      return source.identity_id == spec.source_identity &&
             target.identity_id == spec.target_identity && expr_differs;
  }
  return false;
}

std::vector<std::pair<std::size_t, std::size_t>> enumerate_pairs(const DatasetManifest& manifest,
                                                                 const ScenarioSpec& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < manifest.size(); ++s)
    for (std::size_t t = 0; t < manifest.size(); ++t)
      if (s != t && pair_allowed(spec, manifest.entries[s], manifest.entries[t])) out.emplace_back(s, t);
  return out;
}

PairSampler::PairSampler(const DatasetManifest& manifest, const ScenarioSpec& spec)
    : rng_(spec.seed) {
  spec.validate(manifest);
  pairs_ = enumerate_pairs(manifest, spec);
  if (pairs_.empty()) {
    throw InvalidArgument("scenario " + std::string(scenario_name(spec.kind)) +
                          " has no valid pairs in this manifest");
  }
}

std::pair<std::size_t, std::size_t> PairSampler::next() {
  std::uniform_int_distribution<std::size_t> pick(0, pairs_.size() - 1);
  return pairs_[pick(rng_)];
}

std::string PairSampler::save_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void PairSampler::restore_state(const std::string& state) {
  std::istringstream is(state);
  is >> rng_;
  if (!is) throw InvalidArgument("corrupt sampler state");
}

std::pair<ManifestEntry, ManifestEntry> sample_pair(const DatasetManifest& manifest,
                                                    const ScenarioSpec& scenario) {
  PairSampler sampler(manifest, scenario);
  const auto [s, t] = sampler.next();
  return {manifest.entries[s], manifest.entries[t]};
}

// ---------------------------------------------------------------------------
// Synthetic faces

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct MouthShape {
  double cx, half_width, corner_y, upper_y, lower_y;

  double upper(double t) const { return corner_y + (upper_y - corner_y) * (1.0 - t * t); }
  double lower(double t) const { return corner_y + (lower_y - corner_y) * (1.0 - t * t); }
};

MouthShape mouth_shape(const SyntheticFaceParams& p) {
  MouthShape m;
  m.cx = 0.5;
  m.half_width = 0.5 * p.mouth_width;
  m.corner_y = p.mouth_y - 0.03 * p.mouth_curvature;
  m.upper_y = p.mouth_y - 0.012;
  m.lower_y = p.mouth_y + 0.012 + 0.05 * p.mouth_openness;
  return m;
}

double brow_y(const SyntheticFaceParams& p) { return p.eye_height - 0.07 - 0.03 * p.brow_raise; }

double segment_distance(Point2 q, Point2 a, Point2 b) {
  const Point2 ab = b - a, aq = q - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  const double t = len2 > 0 ? std::clamp((aq.x * ab.x + aq.y * ab.y) / len2, 0.0, 1.0) : 0.0;
  return distance(q, a + t * ab);
}

double ellipse_distance(Point2 q, Point2 c, double ax, double ay) {
  const double r = std::hypot((q.x - c.x) / ax, (q.y - c.y) / ay);
  return (r - 1.0) * std::min(ax, ay);
}

void blend(Rgb& dst, const Rgb& src, double coverage) {
  for (int k = 0; k < 3; ++k) dst[k] += coverage * (src[k] - dst[k]);
}

}  // namespace

SyntheticFaceParams SyntheticFaceParams::for_identity(std::uint64_t identity_seed) {
  std::mt19937_64 rng(mix_seed(identity_seed, 0x1d));
  SyntheticFaceParams p;
  p.identity_seed = identity_seed;
  p.head_axes = {uniform(rng, 0.27, 0.33), uniform(rng, 0.36, 0.43)};
  p.head_center = {0.5, uniform(rng, 0.54, 0.58)};
  // Pupils, nose tip and neutral mouth corners stay on the anchor template so
  // a neutral face aligns exactly; identities differ in shape and colour.
  p.eye_half_width = uniform(rng, 0.05, 0.07);
  p.eye_half_height = uniform(rng, 0.02, 0.03);
  p.skin = {uniform(rng, 0.1, 0.8), uniform(rng, -0.2, 0.4), uniform(rng, -0.4, 0.2)};
  p.background = {uniform(rng, -1.0, 0.2), uniform(rng, -1.0, 0.2), uniform(rng, -1.0, 0.2)};
  p.feature = {uniform(rng, -0.9, -0.5), uniform(rng, -0.9, -0.5), uniform(rng, -0.9, -0.4)};
  return p;
}

void SyntheticFaceParams::set_expression(std::uint64_t seed, int expression) {
  std::mt19937_64 rng(mix_seed(seed, 0x5000 + static_cast<std::uint64_t>(expression)));
  brow_raise = uniform(rng, -1.0, 1.0);
  mouth_curvature = uniform(rng, -1.0, 1.0);
  mouth_openness = uniform(rng, 0.0, 1.0);
}

void SyntheticFaceParams::validate() const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(brow_raise, -1, 1) || !in(mouth_curvature, -1, 1) || !in(mouth_openness, 0, 1)) {
    throw InvalidArgument("synthetic face expression parameters out of range");
  }
  if (!(head_axes.x > 0 && head_axes.y > 0 && eye_spacing > 0 && eye_half_width > 0 &&
        eye_half_height > 0 && mouth_width > 0)) {
    throw InvalidArgument("synthetic face proportions must be positive");
  }
}

LandmarkSet synthetic_landmarks_unposed(const SyntheticFaceParams& p, int size) {
  const double s = size;
  auto px = [s](double x, double y) { return Point2{s * x, s * y}; };
  const double exl = 0.5 - 0.5 * p.eye_spacing, exr = 0.5 + 0.5 * p.eye_spacing;
  const double ey = p.eye_height, w = p.eye_half_width, h = p.eye_half_height;
  const double by = brow_y(p);
  const MouthShape m = mouth_shape(p);
  std::vector<Point2> pts = {
      // left eye: outer corner, top, inner corner, bottom
      px(exl - w, ey), px(exl, ey - h), px(exl + w, ey), px(exl, ey + h),
      // right eye
      px(exr - w, ey), px(exr, ey - h), px(exr + w, ey), px(exr, ey + h),
      // brows, inner end slightly lower
      px(exl - 0.05, by), px(exl + 0.05, by + 0.01), px(exr - 0.05, by + 0.01), px(exr + 0.05, by),
      // nose tip
      px(0.5, p.nose_y),
      // outer lip contour: left corner, upper centre, right corner, lower right, lower left
      px(m.cx - m.half_width, m.corner_y), px(m.cx, m.upper_y), px(m.cx + m.half_width, m.corner_y),
      px(m.cx + 0.5 * m.half_width, m.lower(0.5)), px(m.cx - 0.5 * m.half_width, m.lower(-0.5))};
  return LandmarkSet(LandmarkLayout::kSynthetic18, std::move(pts));
}

SyntheticFace render_synthetic_face(const SyntheticFaceParams& p, int size) {
  p.validate();
  if (size <= 0) throw InvalidArgument("render size must be positive");
  const LandmarkSet unposed = synthetic_landmarks_unposed(p, size);
  SyntheticFace face{Tensor({3, size, size}), p.pose.apply(unposed)};

  const SimilarityTransform inv = p.pose.inverse();
  const double px_per_unit = size * p.pose.scale();
  const double exl = 0.5 - 0.5 * p.eye_spacing, exr = 0.5 + 0.5 * p.eye_spacing;
  const double by = brow_y(p);
  const MouthShape m = mouth_shape(p);
  const Rgb nose_color{p.skin[0] - 0.3, p.skin[1] - 0.3, p.skin[2] - 0.3};
  auto coverage = [px_per_unit](double d_units) { return std::clamp(0.5 - d_units * px_per_unit, 0.0, 1.0); };

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Point2 c = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      const Point2 q{c.x / size, c.y / size};
      Rgb col = p.background;
      blend(col, p.skin, coverage(ellipse_distance(q, p.head_center, p.head_axes.x, p.head_axes.y)));
      for (double ex : {exl, exr}) {
        blend(col, p.feature, coverage(ellipse_distance(q, {ex, p.eye_height}, p.eye_half_width, p.eye_half_height)));
      }
      blend(col, p.feature, coverage(segment_distance(q, {exl - 0.05, by}, {exl + 0.05, by + 0.01}) - 0.008));
      blend(col, p.feature, coverage(segment_distance(q, {exr - 0.05, by + 0.01}, {exr + 0.05, by}) - 0.008));
      blend(col, nose_color, coverage(segment_distance(q, {0.5, p.eye_height + 0.05}, {0.5, p.nose_y}) - 0.006));
      {
        const double t = std::clamp((q.x - m.cx) / m.half_width, -1.0, 1.0);
        const double d = std::max({m.upper(t) - q.y, q.y - m.lower(t), std::abs(q.x - m.cx) - m.half_width});
        blend(col, p.lips, coverage(d));
      }
      for (int k = 0; k < 3; ++k) face.image.at(k, y, x) = std::clamp(col[k], -1.0, 1.0);
    }
  }
  return face;
}

DatasetManifest build_synthetic_manifest(int n_identities, int n_expressions,
                                         const std::filesystem::path& out_dir, std::uint64_t seed,
                                         const SynthOptions& options) {
  if (n_identities < 1 || n_expressions < 1) {
    throw InvalidArgument("synthetic manifest needs at least one identity and one expression");
  }
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "landmarks");
  DatasetManifest manifest;
  manifest.root = out_dir;
  char name[64];
  for (int i = 0; i < n_identities; ++i) {
    const auto base = SyntheticFaceParams::for_identity(mix_seed(seed, static_cast<std::uint64_t>(i)));
    for (int e = 0; e < n_expressions; ++e) {
      SyntheticFaceParams p = base;
      p.set_expression(seed, e);
      if (options.pose_jitter) {
        std::mt19937_64 rng(mix_seed(seed, 0x90000 + static_cast<std::uint64_t>(i * n_expressions + e)));
        const double scale = uniform(rng, 0.92, 1.08);
        const double rot = uniform(rng, -10.0, 10.0) * std::numbers::pi / 180.0;
        const double shift = 0.03 * options.size;
        const Point2 centre{0.5 * options.size, 0.5 * options.size};
        // rotate and scale about the canvas centre, then shift
        const SimilarityTransform about(scale, rot, {0.0, 0.0});
        const Point2 moved = about.apply(centre);
        p.pose = SimilarityTransform(scale, rot,
                                     {centre.x - moved.x + uniform(rng, -shift, shift),
                                      centre.y - moved.y + uniform(rng, -shift, shift)});
      }
      const SyntheticFace face = render_synthetic_face(p, options.size);
      std::snprintf(name, sizeof name, "id%03d_ex%02d", i, e);
      ManifestEntry entry;
      entry.image_path = std::string("images/") + name + ".png";
      entry.landmarks_path = std::string("landmarks/") + name + ".json";
      std::snprintf(name, sizeof name, "id%03d", i);
      entry.identity_id = name;
      std::snprintf(name, sizeof name, "ex%02d", e);
      entry.expression_id = name;
      write_png(out_dir / entry.image_path, face.image);
      write_landmarks(out_dir / entry.landmarks_path, face.landmarks);
      manifest.entries.push_back(std::move(entry));
    }
  }
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

NormalizedFace load_normalized(const DatasetManifest& manifest, std::size_t index,
                               const AnchorTemplate& tmpl) {
  return normalize_face(read_png(manifest.image_file(index)),
                        read_landmarks(manifest.landmarks_file(index)), tmpl);
}

}  // namespace reenact

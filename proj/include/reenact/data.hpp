// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset manifests, scenario-constrained pair sampling and procedural
// synthetic faces with exact landmarks.
//
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reenact/geometry.hpp"
#include "reenact/tensor.hpp"

namespace reenact {

enum class ScenarioKind { kManyToMany, kOneToOne, kOneToAnother };

std::string_view scenario_name(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view name);

struct ManifestEntry {
  std::string image_path;  // relative to the manifest root
  std::string identity_id;
  std::string expression_id;
  std::string landmarks_path;

  bool operator==(const ManifestEntry&) const = default;
};

/// JSON Lines file, one {image_path, identity_id, expression_id, landmarks_path}
/// object per line; paths resolve against the manifest's directory.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::filesystem::path image_file(std::size_t i) const { return root / entries.at(i).image_path; }
  std::filesystem::path landmarks_file(std::size_t i) const { return root / entries.at(i).landmarks_path; }
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kManyToMany;
  std::string identity;         // one-to-one
  std::string source_identity;  // one-to-another
  std::string target_identity;  // one-to-another
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when required ids are missing or absent from the manifest.
  void validate(const DatasetManifest& manifest) const;
};

/// Scenario filter on an ordered (source, target) pair:
///   many-to-many    identities differ and expressions differ
///   one-to-one      both identities equal the fixed id, expressions differ
///   one-to-another  fixed source and target ids, expressions differ
bool pair_allowed(const ScenarioSpec& spec, const ManifestEntry& source, const ManifestEntry& target);

/// Every ordered (source, target) index pair passing the filter.
std::vector<std::pair<std::size_t, std::size_t>> enumerate_pairs(const DatasetManifest& manifest,
                                                                 const ScenarioSpec& spec);

/// Uniform draws over the valid pairs; the sequence is a function of the seed.
class PairSampler {
 public:
  PairSampler(const DatasetManifest& manifest, const ScenarioSpec& spec);

  std::pair<std::size_t, std::size_t> next();
  const std::vector<std::pair<std::size_t, std::size_t>>& support() const { return pairs_; }

  std::string save_state() const;
  void restore_state(const std::string& state);

 private:
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::mt19937_64 rng_;
};

/// One draw with a fresh sampler seeded from `scenario.seed`.
std::pair<ManifestEntry, ManifestEntry> sample_pair(const DatasetManifest& manifest,
                                                    const ScenarioSpec& scenario);

using Rgb = std::array<double, 3>;  // [-1, 1]

/// Parameters of a procedural face. Geometry is in canvas units ([0, 1] spans
/// the canvas before the pose is applied).
struct SyntheticFaceParams {
  Point2 head_center{0.5, 0.56};
  Point2 head_axes{0.30, 0.40};
  double eye_spacing = 0.30;  // between eye centres
  double eye_height = 0.40;   // y of eye centres
  double eye_half_width = 0.06;
  double eye_half_height = 0.025;
  double nose_y = 0.58;
  double mouth_y = 0.76;
  double mouth_width = 0.22;  // corner to corner
  double brow_raise = 0.0;        // [-1, 1]
  double mouth_curvature = 0.0;   // [-1, 1], +1 smiles
  double mouth_openness = 0.0;    // [0, 1]
  std::uint64_t identity_seed = 0;
  Rgb skin{0.55, 0.2, 0.0};
  Rgb background{-0.6, -0.4, -0.2};
  Rgb feature{-0.8, -0.8, -0.7};
  Rgb lips{0.3, -0.6, -0.5};
  SimilarityTransform pose;  // applied in pixel space

  /// Proportions and colours drawn from the identity seed; neutral expression.
  static SyntheticFaceParams for_identity(std::uint64_t identity_seed);
  /// Brow/mouth settings for expression index `expression` of a dataset seed.
  void set_expression(std::uint64_t seed, int expression);
  void validate() const;
};

/// synthetic18 landmarks before the pose, in pixels of a size×size canvas.
LandmarkSet synthetic_landmarks_unposed(const SyntheticFaceParams& params, int size);

struct SyntheticFace {
  Tensor image;  // {3, size, size}
  LandmarkSet landmarks;
};

/// Deterministic anti-aliased render plus exact synthetic18 landmarks
/// (pose ∘ unposed landmarks).
SyntheticFace render_synthetic_face(const SyntheticFaceParams& params, int size);

struct SynthOptions {
  int size = 64;
  /// Random per-face pose (rotation ±10°, scale ±8%, shift ±3%).
  bool pose_jitter = true;
};

/// Renders n_identities × n_expressions faces into out_dir/{images,landmarks}
/// and writes out_dir/manifest.jsonl.
DatasetManifest build_synthetic_manifest(int n_identities, int n_expressions,
                                         const std::filesystem::path& out_dir, std::uint64_t seed,
                                         const SynthOptions& options = {});

/// Loads an entry's image and landmarks and aligns them to the template.
NormalizedFace load_normalized(const DatasetManifest& manifest, std::size_t index,
                               const AnchorTemplate& tmpl);

}  // namespace reenact

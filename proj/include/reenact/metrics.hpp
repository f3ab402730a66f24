// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reenact/data.hpp"
#include "reenact/geometry.hpp"
#include "reenact/losses.hpp"

namespace reenact {

/// Mean landmark displacement normalised by the source's inter-ocular
/// distance, in percent.
double nmse(const LandmarkSet& src_landmarks, const LandmarkSet& gen_landmarks);

/// Cosine similarity; throws InvalidArgument for zero vectors.
double csim(std::span<const double> a, std::span<const double> b);

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased (n − 1) estimator
};

GaussianStats fit_gaussian(std::span<const std::vector<double>> features);
/// ‖μ₁−μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2}); the trace of the square root is
/// taken as Tr((√Σ₁ Σ₂ √Σ₁)^{1/2}) with negative eigenvalues clipped to 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);
double fid(std::span<const std::vector<double>> features_a, std::span<const std::vector<double>> features_b);

/// Source of landmarks for generated images.
class LandmarkDetector {
 public:
  virtual ~LandmarkDetector() = default;
  virtual LandmarkSet detect(const Tensor& image) const = 0;
};

/// Returns the landmarks of the registered reference image closest to the
/// query in mean squared pixel distance. Stands in for a real detector on
/// synthetic data whose renders and ground truth are known.
class NearestReferenceDetector final : public LandmarkDetector {
 public:
  void add(Tensor image, LandmarkSet landmarks);
  std::size_t size() const { return refs_.size(); }
  LandmarkSet detect(const Tensor& image) const override;

 private:
  std::vector<std::pair<Tensor, LandmarkSet>> refs_;
};

struct EvalPair {
  std::string id;
  Tensor source;
  LandmarkSet source_landmarks;
  Tensor target;
};

struct PairRecord {
  std::string pair_id;
  double nmse_percent = 0.0;
  double csim = 0.0;
  std::string error;  // nonempty when the pair failed

  bool ok() const { return error.empty(); }
};

struct EvalAggregate {
  double mean_nmse = 0.0;
  double mean_csim = 0.0;
  std::optional<double> fid;
  std::size_t sample_count = 0;
};

struct EvalReport {
  ScenarioKind scenario = ScenarioKind::kManyToMany;
  std::vector<PairRecord> records;
  EvalAggregate aggregate;

  std::string to_json() const;
  /// FID ↓ / NMSE ↓ / CSIM ↑ fixed-width table.
  std::string table() const;
};

/// Aggregates recomputed from successful records; fid is left untouched.
EvalAggregate aggregate_records(std::span<const PairRecord> records);

using GenerateFn = std::function<Tensor(const Tensor& source, const Tensor& target)>;

/// Generates x̂ per pair, scores NMSE(source landmarks, detect(x̂)) and
/// CSIM(embed(x̂), embed(target)), and FID between target and generated
/// features when both sets have at least two members. Per-pair failures are
/// recorded; an exception is thrown only when every pair fails.
EvalReport evaluate_pairs(std::span<const EvalPair> pairs, const GenerateFn& generate,
                          const LandmarkDetector& detector, const FeatureExtractor& embedder,
                          const FeatureExtractor& fid_features, ScenarioKind scenario);

}  // namespace reenact

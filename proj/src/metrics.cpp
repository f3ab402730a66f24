// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "reenact/errors.hpp"

namespace reenact {

double nmse(const LandmarkSet& src_landmarks, const LandmarkSet& gen_landmarks) {
  if (src_landmarks.layout() != gen_landmarks.layout() ||
      src_landmarks.size() != gen_landmarks.size()) {
    throw InvalidArgument("nmse: landmark layouts differ (" +
                          std::string(layout_name(src_landmarks.layout())) + " vs " +
                          std::string(layout_name(gen_landmarks.layout())) + ")");
  }
  if (src_landmarks.size() == 0) throw InvalidArgument("nmse: no landmarks");
  const double iod = interocular_distance(src_landmarks);
  double total = 0.0;
  for (std::size_t i = 0; i < src_landmarks.size(); ++i) {
    total += distance(src_landmarks[i], gen_landmarks[i]);
  }
  return total / (static_cast<double>(src_landmarks.size()) * iod) * 100.0;
}

double csim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("csim: embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("csim: zero embedding vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

GaussianStats fit_gaussian(std::span<const std::vector<double>> features) {
  if (features.size() < 2) throw InvalidArgument("fid needs at least two feature vectors per set");
  const auto d = static_cast<Eigen::Index>(features[0].size());
  if (d == 0) throw InvalidArgument("fid: empty feature vectors");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()), d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (static_cast<Eigen::Index>(features[i].size()) != d) {
      throw ShapeError("fid: feature vectors have different dimensions");
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = features[i][j];
      if (!std::isfinite(v)) throw InvalidArgument("fid: non-finite feature value");
      x(static_cast<Eigen::Index>(i), j) = v;
    }
  }
  GaussianStats s;
  s.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(features.size() - 1);
  return s;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size()) throw ShapeError("fid: feature dimensions differ");
  const Eigen::MatrixXd ra = psd_sqrt(a.cov);
  const Eigen::MatrixXd inner = ra * b.cov * ra;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()),
                                                      Eigen::EigenvaluesOnly);
  const double tr_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double mean_term = (a.mean - b.mean).squaredNorm();
  return std::max(0.0, mean_term + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt);
}

double fid(std::span<const std::vector<double>> features_a, std::span<const std::vector<double>> features_b) {
  return frechet_distance(fit_gaussian(features_a), fit_gaussian(features_b));
}

void NearestReferenceDetector::add(Tensor image, LandmarkSet landmarks) {
  refs_.emplace_back(std::move(image), std::move(landmarks));
}

LandmarkSet NearestReferenceDetector::detect(const Tensor& image) const {
  if (refs_.empty()) throw InvalidArgument("nearest-reference detector has no references");
  double best = std::numeric_limits<double>::infinity();
  const LandmarkSet* found = nullptr;
  for (const auto& [ref, lm] : refs_) {
    if (ref.shape() != image.shape()) continue;
    double d = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) d += (ref[i] - image[i]) * (ref[i] - image[i]);
    if (d < best) {
      best = d;
      found = &lm;
    }
  }
  if (!found) throw ShapeError("no reference image of shape " + shape_str(image.shape()));
  return *found;
}

EvalAggregate aggregate_records(std::span<const PairRecord> records) {
  EvalAggregate agg;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    agg.mean_nmse += r.nmse_percent;
    agg.mean_csim += r.csim;
    ++agg.sample_count;
  }
  if (agg.sample_count > 0) {
    agg.mean_nmse /= static_cast<double>(agg.sample_count);
    agg.mean_csim /= static_cast<double>(agg.sample_count);
  }
  return agg;
}

EvalReport evaluate_pairs(std::span<const EvalPair> pairs, const GenerateFn& generate,
                          const LandmarkDetector& detector, const FeatureExtractor& embedder,
                          const FeatureExtractor& fid_features, ScenarioKind scenario) {
  if (pairs.empty()) throw InvalidArgument("evaluate_pairs: no pairs");
  EvalReport report;
  report.scenario = scenario;
  std::vector<std::vector<double>> real_features, fake_features;
  for (const auto& pair : pairs) {
    PairRecord rec;
    rec.pair_id = pair.id;
    try {
      const Tensor generated = generate(pair.source, pair.target);
      rec.nmse_percent = nmse(pair.source_landmarks, detector.detect(generated));
      rec.csim = csim(embedder.features(generated).values(), embedder.features(pair.target).values());
      fake_features.push_back(fid_features.features(generated).vec());
      real_features.push_back(fid_features.features(pair.target).vec());
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    report.records.push_back(std::move(rec));
  }
  report.aggregate = aggregate_records(report.records);
  if (report.aggregate.sample_count == 0) {
    throw Error("evaluation failed for every pair; first error: " + report.records.front().error);
  }
  if (real_features.size() >= 2 && fake_features.size() >= 2) {
    report.aggregate.fid = fid(real_features, fake_features);
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = std::string(scenario_name(scenario));
  auto recs = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json e;
    e["pair_id"] = r.pair_id;
    if (r.ok()) {
      e["nmse_percent"] = r.nmse_percent;
      e["csim"] = r.csim;
    } else {
      e["error"] = r.error;
    }
    recs.push_back(std::move(e));
  }
  j["records"] = std::move(recs);
  nlohmann::ordered_json agg;
  agg["mean_nmse"] = aggregate.mean_nmse;
  agg["mean_csim"] = aggregate.mean_csim;
  agg["fid"] = aggregate.fid ? nlohmann::ordered_json(*aggregate.fid) : nlohmann::ordered_json(nullptr);
  agg["sample_count"] = aggregate.sample_count;
  j["aggregate"] = std::move(agg);
  return j.dump(2);
}

std::string EvalReport::table() const {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "%-16s %10s %10s %10s\n", "", "FID ↓", "NMSE ↓", "CSIM ↑");
  out += line;
  const std::string fid_text = aggregate.fid ? [&] {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", *aggregate.fid);
    return std::string(b);
  }() : std::string("-");
  std::snprintf(line, sizeof line, "%-16s %8s %8.2f%% %8.2f\n", std::string(scenario_name(scenario)).c_str(),
                fid_text.c_str(), aggregate.mean_nmse, aggregate.mean_csim);
  out += line;
  return out;
}

}  // namespace reenact

// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Landmark geometry: similarity alignment, face normalization, boundary-line
// interpolation and rasterization of the conditioning map.
//
// Coordinates are in pixels with pixel centres at integer positions; x grows
// to the right, y downwards. All functions here are pure.
//
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reenact/tensor.hpp"

namespace reenact {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

double distance(Point2 a, Point2 b);

/// Point conventions understood by the pipeline.
enum class LandmarkLayout {
  kCanonical68,  // iBUG 68-point annotation
  kSynthetic18,  // procedural faces, see data.hpp
  kAnchor5,      // left pupil, right pupil, nose tip, left/right mouth corner
};

std::string_view layout_name(LandmarkLayout layout);
LandmarkLayout parse_layout(std::string_view name);
int layout_point_count(LandmarkLayout layout);

/// Inclusive index range [first, last] of one semantic region.
struct LandmarkGroup {
  std::string name;
  int first = 0;
  int last = 0;

  int count() const { return last - first + 1; }
};

/// Default region map of a layout ("left_eye", "right_eye", "left_brow",
/// "right_brow", "nose", "mouth_outer", "mouth_inner", "jaw"; whichever apply).
std::vector<LandmarkGroup> default_groups(LandmarkLayout layout);

class LandmarkSet {
 public:
  LandmarkSet() = default;
  /// Validates finiteness, point count and that the groups partition the
  /// indices. Empty `groups` selects default_groups(layout).
  LandmarkSet(LandmarkLayout layout, std::vector<Point2> points,
              std::vector<LandmarkGroup> groups = {});

  LandmarkLayout layout() const { return layout_; }
  const std::vector<Point2>& points() const { return points_; }
  const std::vector<LandmarkGroup>& groups() const { return groups_; }
  std::size_t size() const { return points_.size(); }
  const Point2& operator[](std::size_t i) const { return points_[i]; }

  const LandmarkGroup* find_group(std::string_view name) const;
  Point2 group_centroid(std::string_view name) const;

  template <typename F>
  LandmarkSet mapped(F&& f) const {
    LandmarkSet out = *this;
    for (auto& p : out.points_) p = f(p);
    return out;
  }

 private:
  LandmarkLayout layout_ = LandmarkLayout::kAnchor5;
  std::vector<Point2> points_;
  std::vector<LandmarkGroup> groups_;
};

/// p -> scale * R(rotation) * p + translation.
class SimilarityTransform {
 public:
  SimilarityTransform() = default;
  SimilarityTransform(double scale, double rotation, Point2 translation);

  double scale() const { return scale_; }
  /// Radians in (-pi, pi].
  double rotation() const { return rotation_; }
  Point2 translation() const { return translation_; }

  Point2 apply(Point2 p) const;
  SimilarityTransform inverse() const;
  /// (this ∘ inner)(p) == this->apply(inner.apply(p)).
  SimilarityTransform compose(const SimilarityTransform& inner) const;
  LandmarkSet apply(const LandmarkSet& landmarks) const;

 private:
  double scale_ = 1.0;
  double rotation_ = 0.0;
  Point2 translation_{};
};

double wrap_angle(double radians);

/// Canonical anchor positions in the crop frame, in LandmarkLayout::kAnchor5 order.
struct AnchorTemplate {
  std::array<Point2, 5> points{};
  int crop_size = 256;

  /// Pupils (0.35N, 0.40N) / (0.65N, 0.40N), nose (0.50N, 0.58N), mouth
  /// corners (0.39N, 0.76N) / (0.61N, 0.76N).
  static AnchorTemplate standard(int crop_size);
  /// Throws InvalidArgument unless left pupil is left of right pupil and all
  /// points fall inside [0, N)².
  void validate() const;
  LandmarkSet as_landmarks() const;
};

/// Least-squares similarity T minimising Σ‖T(src_i) − dst_i‖² (closed form,
/// no reflections). Throws DegenerateGeometryError if the scale cannot be
/// recovered.
SimilarityTransform estimate_similarity(std::span<const Point2> src, std::span<const Point2> dst);
SimilarityTransform estimate_similarity(const LandmarkSet& src_anchors,
                                        const AnchorTemplate& tmpl);

/// Anchor5 set derived from a full layout: pupils are the eye-group centroids.
LandmarkSet extract_anchors(const LandmarkSet& full);

/// Resamples `image` ({C, H, W}) into an out_size×out_size crop, where `t`
/// maps source pixels into the crop. Bilinear; reads outside the source are 0.
Tensor warp_crop(const Tensor& image, const SimilarityTransform& t, int out_size);

struct NormalizedFace {
  Tensor image;
  LandmarkSet landmarks;
  SimilarityTransform transform;
  /// Largest distance between a mapped anchor and its template position.
  double anchor_residual = 0.0;
};

/// extract_anchors → estimate_similarity → warp_crop, with all landmarks
/// mapped through the same transform. When `max_anchor_residual` is set and
/// exceeded, DegenerateGeometryError is thrown.
NormalizedFace normalize_face(const Tensor& image, const LandmarkSet& landmarks,
                              const AnchorTemplate& tmpl,
                              std::optional<double> max_anchor_residual = std::nullopt);

struct Polyline {
  std::string group;
  std::vector<Point2> points;
};

/// One piecewise-linear polyline per group with consecutive samples at most
/// 1/density apart; endpoints are the group's first and last landmarks.
std::vector<Polyline> interpolate_boundaries(const LandmarkSet& landmarks, double density);

/// Rasterised boundary lines, {channels, N, N}, values in {0, 1}.
struct BoundaryMap {
  Tensor channels;
  LandmarkLayout source_layout = LandmarkLayout::kSynthetic18;
};

/// Channel a group is drawn into for a given channel count (1, 2 or 3).
/// Three channels: eyes+brows, nose, mouth+jaw.
int boundary_channel(std::string_view group, int channel_count);

/// Pixels within line_width/2 of a polyline are set to 1 in that polyline's
/// channel; all others are 0.
BoundaryMap rasterize_boundary_map(std::span<const Polyline> polylines, int size,
                                   double line_width = 1.0, int channel_count = 3,
                                   LandmarkLayout source_layout = LandmarkLayout::kSynthetic18);

/// interpolate_boundaries + rasterize_boundary_map with unit density.
BoundaryMap render_boundary_map(const LandmarkSet& landmarks, int size, int channel_count = 3,
                                double line_width = 1.0);

/// Distance between the left- and right-eye centroids. Throws
/// DegenerateGeometryError when it is zero.
double interocular_distance(const LandmarkSet& landmarks);

// Landmark files: {"layout": str, "points": [[x, y], ...], "groups": {name: [first, last]}}.
std::string landmarks_to_json(const LandmarkSet& landmarks);
LandmarkSet landmarks_from_json(std::string_view text);
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks);
LandmarkSet read_landmarks(const std::filesystem::path& path);

}  // namespace reenact

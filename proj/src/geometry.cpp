// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "reenact/errors.hpp"

namespace reenact {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view layout_name(LandmarkLayout layout) {
  switch (layout) {
    case LandmarkLayout::kCanonical68: return "canonical68";
    case LandmarkLayout::kSynthetic18: return "synthetic18";
    case LandmarkLayout::kAnchor5: return "anchor5";
  }
  return "unknown";
}

LandmarkLayout parse_layout(std::string_view name) {
  if (name == "canonical68") return LandmarkLayout::kCanonical68;
  if (name == "synthetic18") return LandmarkLayout::kSynthetic18;
  if (name == "anchor5") return LandmarkLayout::kAnchor5;
  throw InvalidArgument("unknown landmark layout '" + std::string(name) + "'");
}

int layout_point_count(LandmarkLayout layout) {
  switch (layout) {
    case LandmarkLayout::kCanonical68: return 68;
    case LandmarkLayout::kSynthetic18: return 18;
    case LandmarkLayout::kAnchor5: return 5;
  }
  return 0;
}

std::vector<LandmarkGroup> default_groups(LandmarkLayout layout) {
  switch (layout) {
    case LandmarkLayout::kCanonical68:
      return {{"jaw", 0, 16},        {"left_brow", 17, 21},   {"right_brow", 22, 26},
              {"nose", 27, 35},      {"left_eye", 36, 41},    {"right_eye", 42, 47},
              {"mouth_outer", 48, 59}, {"mouth_inner", 60, 67}};
    case LandmarkLayout::kSynthetic18:
      return {{"left_eye", 0, 3},   {"right_eye", 4, 7}, {"left_brow", 8, 9},
              {"right_brow", 10, 11}, {"nose", 12, 12},  {"mouth_outer", 13, 17}};
    case LandmarkLayout::kAnchor5:
      return {{"left_eye", 0, 0}, {"right_eye", 1, 1}, {"nose", 2, 2}, {"mouth_outer", 3, 4}};
  }
  return {};
}

LandmarkSet::LandmarkSet(LandmarkLayout layout, std::vector<Point2> points,
                         std::vector<LandmarkGroup> groups)
    : layout_(layout), points_(std::move(points)), groups_(std::move(groups)) {
  const int expected = layout_point_count(layout_);
  if (static_cast<int>(points_.size()) != expected) {
    throw InvalidArgument("layout " + std::string(layout_name(layout_)) + " needs " +
                          std::to_string(expected) + " points, got " +
                          std::to_string(points_.size()));
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
      throw InvalidArgument("landmark " + std::to_string(i) + " is not finite");
    }
  }
  if (groups_.empty()) groups_ = default_groups(layout_);
  std::sort(groups_.begin(), groups_.end(),
            [](const LandmarkGroup& a, const LandmarkGroup& b) { return a.first < b.first; });
  std::vector<int> owner(points_.size(), 0);
  for (const auto& g : groups_) {
    if (g.first < 0 || g.last < g.first || g.last >= expected) {
      throw InvalidArgument("group '" + g.name + "' has an invalid range");
    }
    for (int i = g.first; i <= g.last; ++i) ++owner[i];
  }
  for (std::size_t i = 0; i < owner.size(); ++i) {
    if (owner[i] != 1) {
      throw InvalidArgument("landmark " + std::to_string(i) + " belongs to " +
                            std::to_string(owner[i]) + " groups; expected exactly one");
    }
  }
}

const LandmarkGroup* LandmarkSet::find_group(std::string_view name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

Point2 LandmarkSet::group_centroid(std::string_view name) const {
  const LandmarkGroup* g = find_group(name);
  if (!g) throw InvalidArgument("landmark set has no '" + std::string(name) + "' group");
  Point2 c{};
  for (int i = g->first; i <= g->last; ++i) c = c + points_[i];
  return (1.0 / g->count()) * c;
}

double wrap_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::remainder(radians, kTwoPi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

SimilarityTransform::SimilarityTransform(double scale, double rotation, Point2 translation)
    : scale_(scale), rotation_(wrap_angle(rotation)), translation_(translation) {
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(rotation) ||
      !std::isfinite(translation.x) || !std::isfinite(translation.y)) {
    throw InvalidArgument("similarity transform needs a finite positive scale");
  }
}

Point2 SimilarityTransform::apply(Point2 p) const {
  const double c = scale_ * std::cos(rotation_);
  const double s = scale_ * std::sin(rotation_);
  return {c * p.x - s * p.y + translation_.x, s * p.x + c * p.y + translation_.y};
}

SimilarityTransform SimilarityTransform::inverse() const {
  const double inv = 1.0 / scale_;
  const double c = std::cos(-rotation_) * inv;
  const double s = std::sin(-rotation_) * inv;
  const Point2 t{-(c * translation_.x - s * translation_.y),
                 -(s * translation_.x + c * translation_.y)};
  return {inv, -rotation_, t};
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& inner) const {
  return {scale_ * inner.scale_, rotation_ + inner.rotation_, apply(inner.translation_)};
}

LandmarkSet SimilarityTransform::apply(const LandmarkSet& landmarks) const {
  return landmarks.mapped([this](Point2 p) { return apply(p); });
}

AnchorTemplate AnchorTemplate::standard(int crop_size) {
  const double n = crop_size;
  AnchorTemplate t;
  t.crop_size = crop_size;
  t.points = {Point2{0.35 * n, 0.40 * n}, Point2{0.65 * n, 0.40 * n}, Point2{0.50 * n, 0.58 * n},
              Point2{0.39 * n, 0.76 * n}, Point2{0.61 * n, 0.76 * n}};
  t.validate();
  return t;
}

void AnchorTemplate::validate() const {
  if (crop_size <= 0) throw InvalidArgument("anchor template crop size must be positive");
  if (!(points[0].x < points[1].x)) {
    throw InvalidArgument("anchor template: left pupil must lie left of the right pupil");
  }
  for (const auto& p : points) {
    if (!(p.x >= 0 && p.x < crop_size && p.y >= 0 && p.y < crop_size)) {
      throw InvalidArgument("anchor template point outside the crop");
    }
  }
}

LandmarkSet AnchorTemplate::as_landmarks() const {
  return LandmarkSet(LandmarkLayout::kAnchor5, std::vector<Point2>(points.begin(), points.end()));
}

SimilarityTransform estimate_similarity(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size() || src.empty()) {
    throw InvalidArgument("estimate_similarity needs equally sized, nonempty point sets");
  }
  const double n = static_cast<double>(src.size());
  Point2 ms{}, md{};
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!std::isfinite(src[i].x) || !std::isfinite(src[i].y) || !std::isfinite(dst[i].x) ||
        !std::isfinite(dst[i].y)) {
      throw InvalidArgument("estimate_similarity: non-finite point");
    }
    ms = ms + src[i];
    md = md + dst[i];
  }
  ms = (1.0 / n) * ms;
  md = (1.0 / n) * md;

  // In complex form the optimal scale-rotation is a = Σ conj(z)·w / Σ|z|².
  double re = 0.0, im = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Point2 z = src[i] - ms;
    const Point2 w = dst[i] - md;
    re += z.x * w.x + z.y * w.y;
    im += z.x * w.y - z.y * w.x;
    norm += z.x * z.x + z.y * z.y;
  }
  double spread = 0.0;
  for (const auto& p : dst) spread = std::max(spread, distance(p, md));
  const double tiny = 1e-12 * std::max(1.0, spread * spread);
  if (norm <= tiny) {
    throw DegenerateGeometryError("source anchors coincide; similarity scale is unrecoverable");
  }
  const double ar = re / norm, ai = im / norm;
  const double scale = std::hypot(ar, ai);
  if (!(scale > 1e-12)) {
    throw DegenerateGeometryError("anchor configuration gives zero similarity scale");
  }
  const double rotation = std::atan2(ai, ar);
  const Point2 t{md.x - (ar * ms.x - ai * ms.y), md.y - (ai * ms.x + ar * ms.y)};
  return {scale, rotation, t};
}

LandmarkSet extract_anchors(const LandmarkSet& full) {
  if (full.layout() == LandmarkLayout::kAnchor5) return full;
  int nose = 0, mouth_left = 0, mouth_right = 0;
  if (full.layout() == LandmarkLayout::kCanonical68) {
    nose = 30;
    mouth_left = 48;
    mouth_right = 54;
  } else {
    nose = 12;
    mouth_left = 13;
    mouth_right = 15;
  }
  return LandmarkSet(LandmarkLayout::kAnchor5,
                     {full.group_centroid("left_eye"), full.group_centroid("right_eye"), full[nose],
                      full[mouth_left], full[mouth_right]});
}

SimilarityTransform estimate_similarity(const LandmarkSet& src_anchors, const AnchorTemplate& tmpl) {
  if (src_anchors.size() != 5) {
    throw InvalidArgument("estimate_similarity expects 5 anchors, got " +
                          std::to_string(src_anchors.size()));
  }
  return estimate_similarity(src_anchors.points(), tmpl.points);
}

Tensor warp_crop(const Tensor& image, const SimilarityTransform& t, int out_size) {
  if (image.rank() != 3 || image.empty()) {
    throw ShapeError("warp_crop expects a nonempty {C, H, W} image, got " +
                     shape_str(image.shape()));
  }
  if (out_size <= 0) throw InvalidArgument("warp_crop: out_size must be positive");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const SimilarityTransform inv = t.inverse();
  Tensor out({c, out_size, out_size}, 0.0);

  auto sample = [&](int ch, int y, int x) -> double {
    return (x >= 0 && x < w && y >= 0 && y < h) ? image.at(ch, y, x) : 0.0;
  };
  for (int v = 0; v < out_size; ++v) {
    for (int u = 0; u < out_size; ++u) {
      const Point2 p = inv.apply({static_cast<double>(u), static_cast<double>(v)});
      const double fx0 = std::floor(p.x), fy0 = std::floor(p.y);
      if (fx0 < -1.0 || fy0 < -1.0 || fx0 > w || fy0 > h) continue;
      const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
      const double fx = p.x - fx0, fy = p.y - fy0;
      for (int ch = 0; ch < c; ++ch) {
        // lerp form keeps constant regions exact
        const double a = sample(ch, y0, x0), b = sample(ch, y0, x0 + 1);
        const double cc = sample(ch, y0 + 1, x0), d = sample(ch, y0 + 1, x0 + 1);
        const double top = a + fx * (b - a);
        const double bottom = cc + fx * (d - cc);
        out.at(ch, v, u) = top + fy * (bottom - top);
      }
    }
  }
  return out;
}

NormalizedFace normalize_face(const Tensor& image, const LandmarkSet& landmarks,
                              const AnchorTemplate& tmpl, std::optional<double> max_anchor_residual) {
  tmpl.validate();
  const LandmarkSet anchors = extract_anchors(landmarks);
  const SimilarityTransform t = estimate_similarity(anchors, tmpl);
  NormalizedFace out;
  out.transform = t;
  out.image = warp_crop(image, t, tmpl.crop_size);
  out.landmarks = t.apply(landmarks);
  for (std::size_t i = 0; i < 5; ++i) {
    out.anchor_residual =
        std::max(out.anchor_residual, distance(t.apply(anchors[i]), tmpl.points[i]));
  }
  if (max_anchor_residual && out.anchor_residual > *max_anchor_residual) {
    throw DegenerateGeometryError("normalized anchors miss the template by " +
                                  std::to_string(out.anchor_residual) + " px");
  }
  return out;
}

std::vector<Polyline> interpolate_boundaries(const LandmarkSet& landmarks, double density) {
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw InvalidArgument("interpolate_boundaries: density must be positive");
  }
  std::vector<Polyline> out;
  for (const auto& g : landmarks.groups()) {
    Polyline line{g.name, {landmarks[g.first]}};
    for (int i = g.first; i < g.last; ++i) {
      const Point2 a = landmarks[i], b = landmarks[i + 1];
      const int steps = static_cast<int>(std::ceil(distance(a, b) * density));
      for (int k = 1; k < steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        line.points.push_back(a + t * (b - a));
      }
      if (steps > 0) line.points.push_back(b);
    }
    out.push_back(std::move(line));
  }
  return out;
}

int boundary_channel(std::string_view group, int channel_count) {
  const bool upper = group.find("eye") != std::string_view::npos ||
                     group.find("brow") != std::string_view::npos;
  const bool nose = group == "nose";
  switch (channel_count) {
    case 1: return 0;
    case 2: return (upper || nose) ? 0 : 1;
    case 3: return upper ? 0 : (nose ? 1 : 2);
    default:
      throw InvalidArgument("boundary map supports 1, 2 or 3 channels, got " +
                            std::to_string(channel_count));
  }
}

BoundaryMap rasterize_boundary_map(std::span<const Polyline> polylines, int size, double line_width,
                                   int channel_count, LandmarkLayout source_layout) {
  if (size <= 0) throw InvalidArgument("rasterize_boundary_map: size must be positive");
  boundary_channel("", channel_count);  // validates the count
  if (!(line_width >= 0.0)) throw InvalidArgument("rasterize_boundary_map: negative line width");
  BoundaryMap map{Tensor({channel_count, size, size}, 0.0), source_layout};
  const double r = 0.5 * line_width;
  const double r2 = r * r;

  auto draw_segment = [&](int ch, Point2 a, Point2 b) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r)) - 1);
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r)) - 1);
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r)) + 1);
    const Point2 ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Point2 ap = Point2{static_cast<double>(x), static_cast<double>(y)} - a;
        double t = len2 > 0.0 ? (ap.x * ab.x + ap.y * ab.y) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = ap.x - t * ab.x, dy = ap.y - t * ab.y;
        if (dx * dx + dy * dy <= r2) map.channels.at(ch, y, x) = 1.0;
      }
    }
  };

  for (const auto& line : polylines) {
    if (line.points.empty()) continue;
    const int ch = boundary_channel(line.group, channel_count);
    if (line.points.size() == 1) {
      draw_segment(ch, line.points[0], line.points[0]);
      continue;
    }
    for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
      draw_segment(ch, line.points[i], line.points[i + 1]);
    }
  }
  return map;
}

BoundaryMap render_boundary_map(const LandmarkSet& landmarks, int size, int channel_count,
                                double line_width) {
  const auto lines = interpolate_boundaries(landmarks, 1.0);
  return rasterize_boundary_map(lines, size, line_width, channel_count, landmarks.layout());
}

double interocular_distance(const LandmarkSet& landmarks) {
  const double d =
      distance(landmarks.group_centroid("left_eye"), landmarks.group_centroid("right_eye"));
  if (!(d > 0.0)) throw DegenerateGeometryError("inter-ocular distance is zero");
  return d;
}

std::string landmarks_to_json(const LandmarkSet& landmarks) {
  nlohmann::ordered_json j;
  j["layout"] = std::string(layout_name(landmarks.layout()));
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : landmarks.points()) pts.push_back({p.x, p.y});
  j["points"] = std::move(pts);
  auto groups = nlohmann::ordered_json::object();
  for (const auto& g : landmarks.groups()) groups[g.name] = {g.first, g.last};
  j["groups"] = std::move(groups);
  return j.dump(2);
}

LandmarkSet landmarks_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const LandmarkLayout layout = parse_layout(j.at("layout").get<std::string>());
    std::vector<Point2> points;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw IoError("landmark point must be [x, y]");
      points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    std::vector<LandmarkGroup> groups;
    if (j.contains("groups")) {
      for (const auto& [name, range] : j.at("groups").items()) {
        groups.push_back({name, range.at(0).get<int>(), range.at(1).get<int>()});
      }
    }
    return LandmarkSet(layout, std::move(points), std::move(groups));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed landmark JSON: ") + e.what());
  }
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << landmarks_to_json(landmarks) << '\n';
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return landmarks_from_json(ss.str());
}

}  // namespace reenact

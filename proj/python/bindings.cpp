// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings. Images cross the boundary as float64 arrays shaped
// (C, H, W); landmark sets as (L, 2) arrays plus a layout name.
//
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "reenact/cli.hpp"
#include "reenact/data.hpp"
#include "reenact/errors.hpp"
#include "reenact/generator.hpp"
#include "reenact/geometry.hpp"
#include "reenact/losses.hpp"
#include "reenact/metrics.hpp"
#include "reenact/training.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace reenact {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

LandmarkSet to_landmarks(const Array& pts, const std::string& layout) {
  if (pts.ndim() != 2 || pts.shape(1) != 2) throw ShapeError("landmarks must be shaped (L, 2)");
  std::vector<Point2> p;
  for (py::ssize_t i = 0; i < pts.shape(0); ++i) p.push_back({pts.at(i, 0), pts.at(i, 1)});
  return LandmarkSet(parse_layout(layout), std::move(p));
}

Array points_array(const LandmarkSet& l) {
  Array out({static_cast<py::ssize_t>(l.size()), py::ssize_t{2}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < l.size(); ++i) {
    m(i, 0) = l[i].x;
    m(i, 1) = l[i].y;
  }
  return out;
}

std::vector<std::vector<double>> rows(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("features must be shaped (n, d)");
  std::vector<std::vector<double>> out;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out.emplace_back(a.data(i, 0), a.data(i, 0) + a.shape(1));
  return out;
}

}  // namespace
}  // namespace reenact

PYBIND11_MODULE(_reenact, m) {
  using namespace reenact;
  m.doc() = "One-shot face reenactment: losses, metrics, geometry and the FPN generator.";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DegenerateGeometryError>(m, "DegenerateGeometryError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  // losses
  m.def("identity_loss", [](const Array& a, const Array& b) { return identity_loss(to_vector(a), to_vector(b)); },
        "e_gen"_a, "e_tgt"_a);
  m.def("ralsgan_generator_loss",
        [](const Array& r, const Array& f) { return ralsgan_generator_loss(to_vector(r), to_vector(f)); },
        "d_real"_a, "d_fake"_a);
  m.def("ralsgan_discriminator_loss",
        [](const Array& r, const Array& f) { return ralsgan_discriminator_loss(to_vector(r), to_vector(f)); },
        "d_real"_a, "d_fake"_a);
  m.def(
      "total_loss",
      [](double identity, double content, double adversarial, double w_content, double w_adv, double w_id) {
        const LossBreakdown b = total_loss({identity, content, adversarial}, {w_content, w_adv, w_id});
        return py::dict("identity"_a = b.identity, "content"_a = b.content, "adversarial"_a = b.adversarial,
                        "total"_a = b.total);
      },
      "identity"_a, "content"_a, "adversarial"_a, "w_content"_a = 0.01, "w_adversarial"_a = 0.001,
      "w_identity"_a = 0.001);

  // metrics
  m.def("nmse",
        [](const Array& src, const Array& gen, const std::string& layout) {
          return nmse(to_landmarks(src, layout), to_landmarks(gen, layout));
        },
        "src"_a, "gen"_a, "layout"_a = "synthetic18");
  m.def("csim", [](const Array& a, const Array& b) { return csim(to_vector(a), to_vector(b)); }, "e1"_a, "e2"_a);
  m.def("fid", [](const Array& a, const Array& b) { return fid(rows(a), rows(b)); }, "features_a"_a,
        "features_b"_a);

  // geometry
  py::class_<SimilarityTransform>(m, "SimilarityTransform")
      .def(py::init([](double s, double r, double tx, double ty) { return SimilarityTransform(s, r, {tx, ty}); }),
           "scale"_a = 1.0, "rotation"_a = 0.0, "tx"_a = 0.0, "ty"_a = 0.0)
      .def_property_readonly("scale", &SimilarityTransform::scale)
      .def_property_readonly("rotation", &SimilarityTransform::rotation)
      .def_property_readonly("translation",
                             [](const SimilarityTransform& t) { return py::make_tuple(t.translation().x, t.translation().y); })
      .def("apply", [](const SimilarityTransform& t, double x, double y) {
        const Point2 p = t.apply({x, y});
        return py::make_tuple(p.x, p.y);
      })
      .def("inverse", &SimilarityTransform::inverse);
  m.def("estimate_similarity",
        [](const Array& src, const Array& dst) {
          const LandmarkSet a = to_landmarks(src, "anchor5"), b = to_landmarks(dst, "anchor5");
          return estimate_similarity(a.points(), b.points());
        },
        "src"_a, "dst"_a);
  m.def("render_boundary_map",
        [](const Array& pts, const std::string& layout, int size, int channels, double line_width) {
          return to_array(render_boundary_map(to_landmarks(pts, layout), size, channels, line_width).channels);
        },
        "landmarks"_a, "layout"_a = "synthetic18", "size"_a = 256, "channels"_a = 3, "line_width"_a = 1.0);
  m.def("interocular_distance",
        [](const Array& pts, const std::string& layout) { return interocular_distance(to_landmarks(pts, layout)); },
        "landmarks"_a, "layout"_a = "synthetic18");

  // data
  m.def(
      "synthetic_face",
      [](std::uint64_t identity_seed, int size, int expression, std::uint64_t expression_seed) {
        SyntheticFaceParams p = SyntheticFaceParams::for_identity(identity_seed);
        if (expression >= 0) p.set_expression(expression_seed, expression);
        const SyntheticFace f = render_synthetic_face(p, size);
        return py::make_tuple(to_array(f.image), points_array(f.landmarks));
      },
      "identity_seed"_a, "size"_a = 64, "expression"_a = -1, "expression_seed"_a = 0);
  m.def(
      "build_synthetic_manifest",
      [](int identities, int expressions, const std::filesystem::path& out, std::uint64_t seed, int size,
         bool jitter) {
        return build_synthetic_manifest(identities, expressions, out, seed, SynthOptions{size, jitter}).size();
      },
      "identities"_a, "expressions"_a, "out_dir"_a, "seed"_a = 0, "size"_a = 64, "pose_jitter"_a = true);

  // generator
  py::class_<Generator>(m, "Generator")
      .def(py::init([](int crop_size, int lateral_channels, bool share_encoders, std::uint64_t seed) {
             GeneratorConfig c;
             c.crop_size = crop_size;
             c.lateral_channels = lateral_channels;
             c.share_encoders = share_encoders;
             c.seed = seed;
             return Generator(c);
           }),
           "crop_size"_a = 256, "lateral_channels"_a = 256, "share_encoders"_a = false, "seed"_a = 1)
      .def_static("from_checkpoint", &load_generator, "directory"_a)
      .def_property_readonly("crop_size", [](const Generator& g) { return g.config().crop_size; })
      .def_property_readonly("parameter_count",
                             [](const Generator& g) { return g.parameters().scalar_count(); })
      .def("zero_output_projection", &Generator::zero_output_projection)
      .def("encode",
           [](const Generator& g, const Array& image, bool source) {
             const FeaturePyramid p =
                 g.encode(Var(to_tensor(image)), source ? EncoderRole::kSource : EncoderRole::kTarget);
             py::list out;
             for (const auto& level : p.levels) out.append(to_array(level.value()));
             return out;
           },
           "image"_a, "source"_a = true)
      .def("generate", [](const Generator& g, const Array& src, const Array& tgt) {
        return to_array(g.generate(to_tensor(src), to_tensor(tgt)));
      }, "source"_a, "target"_a);

  // training
  m.def(
      "lr_schedule",
      [](double epoch, double lr_initial, double lr_final, int decay_start, int total_epochs) {
        TrainingConfig c;
        c.lr_initial = lr_initial;
        c.lr_final = lr_final;
        c.decay_start_epoch = decay_start;
        c.total_epochs = total_epochs;
        return lr_schedule(epoch, c);
      },
      "epoch"_a, "lr_initial"_a = 1e-4, "lr_final"_a = 1e-7, "decay_start"_a = 40, "total_epochs"_a = 100);

  // command line, in process
  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "facereenact");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "args"_a, "Runs a facereenact subcommand; returns (exit_code, stdout, stderr).");
}

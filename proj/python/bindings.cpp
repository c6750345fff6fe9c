#include <cmath>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "normint/discontinuity_opt.hpp"
#include "normint/io_formats.hpp"
#include "normint/metrics.hpp"
#include "normint/scene_synth.hpp"

namespace py = pybind11;
using namespace normint;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array depth_to_array(const DepthMap& d) {
  Array out({d.height(), d.width()});
  auto v = out.mutable_unchecked<2>();
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) v(y, x) = d(x, y);
  return out;
}

DepthMap array_to_depth(const Array& a) {
  if (a.ndim() != 2) throw Error("depth arrays must be 2-D (rows, cols)");
  auto v = a.unchecked<2>();
  DepthMap d(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) d(x, y) = v(y, x);
  return d;
}

py::array_t<bool> mask_to_array(const Mask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  auto v = out.mutable_unchecked<2>();
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) v(y, x) = m(x, y) != 0;
  return out;
}

Mask array_to_mask(const py::object& obj, int width, int height) {
  if (obj.is_none()) return Mask(width, height, 1);
  auto a = py::array_t<bool, py::array::c_style | py::array::forcecast>::ensure(obj);
  if (!a || a.ndim() != 2 || a.shape(0) != height || a.shape(1) != width)
    throw Error("mask must be a (rows, cols) array matching the normals");
  auto v = a.unchecked<2>();
  Mask m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m(x, y) = v(y, x) ? 1 : 0;
  return m;
}

Array normals_to_array(const NormalMap& n) {
  Array out({n.height(), n.width(), 3});
  auto v = out.mutable_unchecked<3>();
  for (int y = 0; y < n.height(); ++y)
    for (int x = 0; x < n.width(); ++x)
      for (int c = 0; c < 3; ++c) v(y, x, c) = n.normals(x, y)[c];
  return out;
}

NormalMap array_to_normals(const Array& a, const py::object& mask) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw Error("normals must have shape (rows, cols, 3)");
  auto v = a.unchecked<3>();
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  NormalMap n(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) n.normals(x, y) = Eigen::Vector3d(v(y, x, 0), v(y, x, 1), v(y, x, 2));
  n.mask = array_to_mask(mask, w, h);
  return n;
}

CameraModel make_camera(const std::string& kind, double focal, const py::object& center, int w, int h) {
  if (kind == "ortho") return CameraModel::orthographic();
  if (kind != "persp") throw Error("camera must be 'ortho' or 'persp'");
  double cu = 0.5 * (w - 1), cv = 0.5 * (h - 1);
  if (!center.is_none()) {
    auto c = center.cast<std::pair<double, double>>();
    cu = c.first;
    cv = c.second;
  }
  return CameraModel::perspective(focal, cu, cv);
}

py::dict scene_to_dict(const Scene& s) {
  py::dict d;
  d["name"] = s.name;
  d["normals"] = normals_to_array(s.normals);
  d["mask"] = mask_to_array(s.normals.mask);
  d["gt_depth"] = depth_to_array(s.gt_depth);
  d["params"] = s.params;
  return d;
}

Scene finish_scene(Scene s, double noise, int holes, double hole_radius, std::uint64_t seed) {
  s = add_gradient_noise(std::move(s), noise, seed);
  return punch_holes(std::move(s), HoleSpec{holes, hole_radius}, seed + 1);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Normal integration with auxiliary edges and discontinuity optimization";
  py::register_exception<Error>(m, "NormintError", PyExc_RuntimeError);

  m.def(
      "make_scene",
      [](const std::string& kind, int size, double jump, int teeth, double depth, double radius,
         std::pair<double, double> slope, double side_slope, double noise, int holes, double hole_radius,
         std::uint64_t seed) {
        Scene s;
        if (kind == "plane") s = make_plane(slope.first, slope.second, size, size);
        else if (kind == "step") s = make_step(jump, size, side_slope);
        else if (kind == "comb") s = make_comb(teeth, depth, size, side_slope);
        else if (kind == "sphere") s = make_sphere_on_plane(radius, size);
        else throw Error("unknown scene kind '" + kind + "'");
        return scene_to_dict(finish_scene(std::move(s), noise, holes, hole_radius, seed));
      },
      py::arg("kind"), py::arg("size") = 64, py::arg("jump") = 5.0, py::arg("teeth") = 4, py::arg("depth") = 5.0,
      py::arg("radius") = 20.0, py::arg("slope") = std::pair<double, double>{0.75, -0.3},
      py::arg("side_slope") = 1.0, py::arg("noise") = 0.0, py::arg("holes") = 0, py::arg("hole_radius") = 3.0,
      py::arg("seed") = 0,
      "Synthetic scene as a dict with normals (rows, cols, 3), mask, gt_depth, name and params.");

  m.def(
      "optimize",
      [](const Array& normals, const py::object& mask, double lambda_soft, double lambda_hard, int n_max, double k,
         double tau, double cg_tol, int cg_max_iter, bool early_stop, const std::string& camera, double focal,
         const py::object& center) {
        const NormalMap n = array_to_normals(normals, mask);
        SolverConfig cfg;
        cfg.lambda_soft = lambda_soft;
        cfg.lambda_hard = lambda_hard;
        cfg.n_max = n_max;
        cfg.k = k;
        cfg.tau = tau;
        cfg.cg_tol = cg_tol;
        cfg.cg_max_iter = cg_max_iter;
        cfg.early_stop = early_stop;
        cfg.camera = make_camera(camera, focal, center, n.width(), n.height());
        OptimizeResult r;
        {
          py::gil_scoped_release release;
          r = optimize(n, cfg);
        }
        py::list lambdas, nonzero;
        for (const IterationRecord& it : r.trace.iterations) {
          lambdas.append(it.lambda);
          nonzero.append(it.nonzero_fraction);
        }
        py::dict out;
        out["depth"] = depth_to_array(r.depth_map);
        out["first_solve"] = depth_to_array(average_to_depth_map(r.graph, r.first_solve));
        out["gprime"] = py::array_t<double>(static_cast<py::ssize_t>(r.gprime.size()), r.gprime.data());
        out["gprime_image"] = depth_to_array(gprime_pixel_magnitude(r.graph, r.gprime));
        out["iterations"] = r.trace.iterations.size();
        out["stopped_early"] = r.trace.stopped_early;
        out["lambdas"] = lambdas;
        out["nonzero_fraction"] = nonzero;
        return out;
      },
      py::arg("normals"), py::arg("mask") = py::none(), py::arg("lambda_soft") = 0.2, py::arg("lambda_hard") = 1.2,
      py::arg("n_max") = 5000, py::arg("k") = 1000.0, py::arg("tau") = 1e-2, py::arg("cg_tol") = 1e-7,
      py::arg("cg_max_iter") = 3000, py::arg("early_stop") = false, py::arg("camera") = "ortho",
      py::arg("focal") = 0.0, py::arg("center") = py::none(),
      "Run the discontinuity-aware integration; returns depth, g' and a trace summary.");

  m.def(
      "poisson",
      [](const Array& normals, const py::object& mask, double aux_weight, const std::string& camera, double focal,
         const py::object& center, double cg_tol) {
        const NormalMap n = array_to_normals(normals, mask);
        const CameraModel cam = make_camera(camera, focal, center, n.width(), n.height());
        DepthMap d;
        {
          py::gil_scoped_release release;
          const PixelGraph g = build_graph(n.mask);
          CgOptions opt;
          opt.tol = cg_tol;
          d = average_to_depth_map(g, poisson_baseline(n, cam, g, opt, aux_weight));
        }
        return depth_to_array(d);
      },
      py::arg("normals"), py::arg("mask") = py::none(), py::arg("aux_weight") = 1.0, py::arg("camera") = "ortho",
      py::arg("focal") = 0.0, py::arg("center") = py::none(), py::arg("cg_tol") = 1e-7,
      "Least-squares integration with g' = 0 and unit weights.");

  m.def(
      "made",
      [](const Array& pred, const Array& gt, const py::object& mask, const std::string& gauge) {
        const DepthMap p = array_to_depth(pred);
        const DepthMap g = array_to_depth(gt);
        const MadeResult r = made(p, g, array_to_mask(mask, g.width(), g.height()),
                                  gauge == "none" ? Gauge::None : Gauge::Median);
        return py::make_tuple(r.made, r.offset);
      },
      py::arg("pred"), py::arg("gt"), py::arg("mask") = py::none(), py::arg("gauge") = "median",
      "(made, offset): mean absolute depth error after median offset alignment.");

  m.def("read_depth_pfm", [](const std::string& path) { return depth_to_array(read_depth_pfm(path)); });
  m.def("write_depth_pfm",
        [](const std::string& path, const Array& depth) { write_depth_pfm(array_to_depth(depth), path); });
  m.def("read_normal_map", [](const std::string& path) {
    const NormalMap n = read_normal_map(path);
    return py::make_tuple(normals_to_array(n), mask_to_array(n.mask));
  });
  m.def(
      "write_normal_map",
      [](const std::string& path, const Array& normals, const py::object& mask) {
        write_normal_map(array_to_normals(normals, mask), path);
      },
      py::arg("path"), py::arg("normals"), py::arg("mask") = py::none());

  m.def("reweight_value", &reweight_value);
  m.def("local_maximumness", &local_maximumness);
  m.def("filter_response", &filter_response);
}

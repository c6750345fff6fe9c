#include "normint/gradient_field.hpp"

#include <cmath>
#include <string>

namespace normint {

CameraModel CameraModel::perspective(double focal, double cu, double cv) {
  CameraModel c{Kind::Perspective, focal, cu, cv};
  c.validate();
  return c;
}

void CameraModel::validate() const {
  if (is_perspective() && !(focal > 0.0 && std::isfinite(focal)))
    throw Error("perspective camera needs a positive focal length, got " + std::to_string(focal));
}

NormalMap sanitize_normals(NormalMap normals) {
  for (int y = 0; y < normals.height(); ++y)
    for (int x = 0; x < normals.width(); ++x) {
      Eigen::Vector3d& n = normals.normals(x, y);
      const double len = n.norm();
      if (!normals.mask(x, y) || !std::isfinite(len) || len < 0.1 || n.z() <= 0.0) {
        normals.mask(x, y) = 0;
        continue;
      }
      n /= len;
    }
  return normals;
}

Image<double> effective_nz(const NormalMap& normals, const CameraModel& camera) {
  Image<double> out(normals.width(), normals.height(), 0.0);
  for (int y = 0; y < normals.height(); ++y)
    for (int x = 0; x < normals.width(); ++x) {
      const Eigen::Vector3d& n = normals.normals(x, y);
      if (camera.is_perspective())
        out(x, y) = n.z() * camera.focal - n.x() * (x - camera.cu) + n.y() * (y - camera.cv);
      else
        out(x, y) = n.z();
    }
  return out;
}

GradientTargets edge_targets(const NormalMap& normals, const CameraModel& camera, const PixelGraph& graph) {
  if (!normals.normals.same_shape(graph.width(), graph.height()))
    throw Error("normal map and graph dimensions differ");
  camera.validate();

  const Image<double> nz = effective_nz(normals, camera);
  GradientTargets t;
  t.nz_eff.resize(graph.pixel_count());
  t.quad_coeff.resize(graph.quad_edges().size());
  t.quad_rhs.resize(graph.quad_edges().size());
  t.nz_aux = camera.is_perspective() ? camera.focal : 1.0;
  t.gprime.assign(graph.aux_edges().size(), 0.0);

  for (int p = 0; p < graph.pixel_count(); ++p) {
    const auto [x, y] = graph.pixel_xy(p);
    t.nz_eff[p] = nz(x, y);
  }
  // x edges follow +u = +x; y edges follow +v, which is -y in the normal frame.
  for (std::size_t i = 0; i < graph.quad_edges().size(); ++i) {
    const QuadEdge& e = graph.quad_edges()[i];
    const auto [x, y] = graph.pixel_xy(e.pixel);
    const Eigen::Vector3d& n = normals.normals(x, y);
    t.quad_coeff[i] = t.nz_eff[e.pixel];
    t.quad_rhs[i] = e.axis == Axis::X ? n.x() : -n.y();
  }
  return t;
}

}  // namespace normint

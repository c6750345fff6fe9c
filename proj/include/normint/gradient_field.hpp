#pragma once

#include <vector>

#include <Eigen/Core>

#include "normint/grid_graph.hpp"
#include "normint/image.hpp"

namespace normint {

/// Camera-space unit normals (+x right, +y up, +z toward the camera) and the
/// pixels that take part in integration.
struct NormalMap {
  Image<Eigen::Vector3d> normals;
  Mask mask;

  NormalMap() = default;
  NormalMap(int width, int height)
      : normals(width, height, Eigen::Vector3d(0.0, 0.0, 1.0)), mask(width, height, 1) {}

  int width() const { return normals.width(); }
  int height() const { return normals.height(); }
};

struct CameraModel {
  enum class Kind { Orthographic, Perspective };

  Kind kind = Kind::Orthographic;
  double focal = 1.0;  // pixels
  double cu = 0.0;
  double cv = 0.0;

  static CameraModel orthographic() { return {}; }
  static CameraModel perspective(double focal, double cu, double cv);

  bool is_perspective() const { return kind == Kind::Perspective; }
  DepthMode depth_mode() const {
    return is_perspective() ? DepthMode::Perspective : DepthMode::Orthographic;
  }
  void validate() const;
};

/// Per-edge integration targets. Quad residuals are formed multiplied through
/// by nz_eff (coeff * D_e d - rhs), so pixels with nz_eff == 0 never divide.
struct GradientTargets {
  std::vector<double> nz_eff;     // per pixel
  std::vector<double> quad_coeff; // per quad edge: nz_eff of the owning pixel
  std::vector<double> quad_rhs;   // per quad edge: normal component along the edge
  double nz_aux = 1.0;
  std::vector<double> gprime;     // per auxiliary edge

  /// nz_eff-free target rhs / coeff; infinite where nz_eff is zero.
  double ghat(int quad) const { return quad_rhs[quad] / quad_coeff[quad]; }
};

struct EdgeWeights {
  std::vector<double> w;

  static EdgeWeights ones(std::size_t n) { return {std::vector<double>(n, 1.0)}; }
};

/// Renormalizes normals and drops pixels with |n| < 0.1 or n_z <= 0 from the mask.
NormalMap sanitize_normals(NormalMap normals);

/// n_z (orthographic) or the perspective-adjusted z component
/// n_z f - n_x (u - c_u) + n_y (v - c_v) at each pixel centre. The signs of the
/// first two terms follow from the +y up / v down convention.
Image<double> effective_nz(const NormalMap& normals, const CameraModel& camera);

GradientTargets edge_targets(const NormalMap& normals, const CameraModel& camera, const PixelGraph& graph);

}  // namespace normint

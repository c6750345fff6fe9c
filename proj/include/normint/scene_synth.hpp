#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "normint/gradient_field.hpp"
#include "normint/grid_graph.hpp"
#include "normint/image.hpp"

namespace normint {

/// Synthetic scene with analytic ground truth. gt_corners holds, per pixel,
/// the depth of that pixel's own smooth piece at its four corners (NW, NE, SW,
/// SE), so ground-truth jumps across auxiliary edges are exact.
struct Scene {
  std::string name;
  DepthMap gt_depth;
  Image<std::array<double, 4>> gt_corners;
  NormalMap normals;
  CameraModel camera;
  std::map<std::string, double> params;

  int width() const { return normals.width(); }
  int height() const { return normals.height(); }
};

/// depth = a x + b y with x = column, y = row (pixel units, about the image centre).
Scene make_plane(double a, double b, int width, int height);

/// Left half flat at 0. The right half is a plane receding with
/// `side_slope` per column from the seam, offset h deeper for the top quarter
/// of the rows, ramping back over the next eighth and flush below. The
/// seam jump is h at the top and fades to 0 where the ramp ends.
Scene make_step(double jump, int size, double side_slope = 1.0);

/// `teeth` vertical prism-shaped teeth whose edges stand h in front of a
/// flat background at the top row and fade back to it over 8 rows (or half
/// the height in small images).
/// Faces slope toward the camera with `side_slope` (two seams per tooth).
Scene make_comb(int teeth, double depth, int size, double side_slope = 1.0);

/// Sphere of the given radius floating in front of a flat plane; its
/// silhouette is an occlusion ring.
Scene make_sphere_on_plane(double radius, int size);

/// Plane seen through a pinhole camera: world-space plane with normal n
/// through the point at depth `distance` on the optical axis.
Scene make_perspective_plane(const Eigen::Vector3d& normal, double distance, int size, double focal);

/// Adds N(0, sigma^2) to both gradient components of every masked pixel and
/// renormalizes. Deterministic per seed.
Scene add_gradient_noise(Scene scene, double sigma, std::uint64_t seed);

struct HoleSpec {
  int count = 0;
  double radius = 0.0;
};

/// Removes `count` disks of the given radius at seeded random centres.
Scene punch_holes(Scene scene, const HoleSpec& spec, std::uint64_t seed);

/// Ground-truth jump on every auxiliary edge (corner depth difference).
std::vector<double> ground_truth_jumps(const PixelGraph& graph, const Scene& scene);

/// Ground-truth per-vertex solution assembled from gt_corners.
DepthSolution ground_truth_solution(const PixelGraph& graph, const Scene& scene);

}  // namespace normint

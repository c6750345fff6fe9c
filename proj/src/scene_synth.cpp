#include "normint/scene_synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace normint {

namespace {

constexpr std::array<std::array<double, 2>, 4> kCorners = {{{-0.5, -0.5}, {0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}}};

// Depth and its image-space gradient (d/du, d/dv) of the smooth piece that
// owns a pixel, evaluated at a point.
struct Sample {
  double depth;
  double du;
  double dv;
};
using PieceFn = std::function<Sample(int px, int py, double u, double v)>;

Scene build_orthographic(std::string name, int width, int height, const PieceFn& piece) {
  if (width < 1 || height < 1) throw Error("scene dimensions must be positive");
  Scene s;
  s.name = std::move(name);
  s.camera = CameraModel::orthographic();
  s.normals = NormalMap(width, height);
  s.gt_depth = DepthMap(width, height, 0.0);
  s.gt_corners = Image<std::array<double, 4>>(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Sample c = piece(x, y, x, y);
      s.gt_depth(x, y) = c.depth;
      // +y is up while v grows downward.
      s.normals.normals(x, y) = Eigen::Vector3d(c.du, -c.dv, 1.0).normalized();
      for (int k = 0; k < 4; ++k) s.gt_corners(x, y)[k] = piece(x, y, x + kCorners[k][0], y + kCorners[k][1]).depth;
    }
  return s;
}

// 1 up to `full_until`, then linear down to 0 at `zero_from` (both in v units).
double fade(double v, double full_until, double zero_from) {
  if (v <= full_until) return 1.0;
  if (v >= zero_from) return 0.0;
  return 1.0 - (v - full_until) / (zero_from - full_until);
}
double fade_slope(int py, double full_until, double zero_from) {
  // Slope of the piece owning row py; kinks sit on pixel boundaries.
  const double centre = py;
  return centre > full_until && centre < zero_from ? -1.0 / (zero_from - full_until) : 0.0;
}

}  // namespace

Scene make_plane(double a, double b, int width, int height) {
  if (width < 2 || height < 2) throw Error("plane scene needs at least 2x2 pixels");
  const double cx = 0.5 * (width - 1);
  const double cy = 0.5 * (height - 1);
  Scene s = build_orthographic("plane", width, height, [&](int, int, double u, double v) {
    return Sample{a * (u - cx) + b * (v - cy), a, b};
  });
  s.params = {{"a", a}, {"b", b}};
  return s;
}

Scene make_step(double jump, int size, double side_slope) {
  if (!(jump > 0.0)) throw Error("step jump must be positive");
  if (size < 8) throw Error("step scene needs size >= 8");
  if (!(side_slope >= 0.0)) throw Error("step side slope must be non-negative");
  const int seam = size / 2;
  const double edge = seam - 0.5;
  const double full_until = size / 4 - 0.5;
  const double zero_from = 3 * size / 8 - 0.5;
  Scene s = build_orthographic("step", size, size, [&](int px, int py, double u, double v) {
    if (px < seam) return Sample{0.0, 0.0, 0.0};
    return Sample{jump * fade(v, full_until, zero_from) + side_slope * (u - edge), side_slope,
                  jump * fade_slope(py, full_until, zero_from)};
  });
  s.params = {{"jump", jump}, {"size", size}, {"seam_column", seam}, {"side_slope", side_slope}};
  return s;
}

Scene make_comb(int teeth, double depth, int size, double side_slope) {
  if (teeth < 1 || !(depth > 0.0)) throw Error("comb needs teeth >= 1 and positive depth");
  if (!(side_slope >= 0.0)) throw Error("comb side slope must be non-negative");
  const int slots = 2 * teeth + 1;
  // Even slot widths keep each tooth's ridge on a pixel boundary.
  const int slot = (size / slots) & ~1;
  if (slot < 2 || size < 16) throw Error("comb teeth do not fit in the image");
  const int margin = (size - slot * slots) / 2;
  const double full_until = -0.5;
  const double zero_from = std::min(8, size / 2) - 0.5;
  auto tooth_centre = [&](int px) {
    const int rel = px - margin;
    if (rel < 0 || rel >= slot * slots || (rel / slot) % 2 == 0) return -1.0;
    return margin + (rel / slot) * slot + 0.5 * (slot - 1);
  };
  // Teeth are closer to the camera than the background; each is a prism
  // with its ridge along the tooth centre.
  Scene s = build_orthographic("comb", size, size, [&](int px, int py, double u, double v) {
    const double c = tooth_centre(px);
    if (c < 0.0) return Sample{0.0, 0.0, 0.0};
    const double ridge = px < c ? -1.0 : 1.0;
    return Sample{-depth * fade(v, full_until, zero_from) - side_slope * (0.5 * slot - std::abs(u - c)),
                  side_slope * ridge, -depth * fade_slope(py, full_until, zero_from)};
  });
  s.params = {{"teeth", teeth}, {"depth", depth}, {"size", size}, {"slot", slot}, {"margin", margin},
              {"side_slope", side_slope}};
  return s;
}

Scene make_sphere_on_plane(double radius, int size) {
  if (!(radius > 1.0) || 2.0 * radius > size) throw Error("sphere must be larger than a pixel and fit in the image");
  const double c = 0.5 * (size - 1);
  const double centre_depth = -0.5 * radius;  // silhouette jump of radius / 2
  auto inside = [&](int px, int py) { return std::hypot(px - c, py - c) < radius; };
  Scene s = build_orthographic("sphere_on_plane", size, size, [&](int px, int py, double u, double v) {
    if (!inside(px, py)) return Sample{0.0, 0.0, 0.0};
    const double du = u - c;
    const double dv = v - c;
    const double h = std::sqrt(std::max(radius * radius - du * du - dv * dv, 0.0));
    if (h == 0.0) return Sample{centre_depth, 0.0, 0.0};
    return Sample{centre_depth - h, du / h, dv / h};
  });
  s.params = {{"radius", radius}, {"size", size}};
  return s;
}

Scene make_perspective_plane(const Eigen::Vector3d& normal, double distance, int size, double focal) {
  if (!(distance > 0.0) || !(focal > 0.0) || size < 2) throw Error("invalid perspective plane parameters");
  const Eigen::Vector3d n = normal.normalized();
  if (!(n.z() > 0.0)) throw Error("plane must face the camera");
  const double c = 0.5 * (size - 1);
  Scene s;
  s.name = "perspective_plane";
  s.camera = CameraModel::perspective(focal, c, c);
  s.normals = NormalMap(size, size);
  s.gt_depth = DepthMap(size, size, 0.0);
  s.gt_corners = Image<std::array<double, 4>>(size, size);
  // Ray through (u, v) is ((u - cu)/f, -(v - cv)/f, -1) times depth; the plane
  // passes through (0, 0, -distance).
  auto depth_at = [&](double u, double v) {
    const double denom = n.z() * focal - n.x() * (u - c) + n.y() * (v - c);
    if (!(denom > 0.0)) throw Error("plane is seen edge-on inside the image");
    return n.z() * distance * focal / denom;
  };
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      s.gt_depth(x, y) = depth_at(x, y);
      s.normals.normals(x, y) = n;
      for (int k = 0; k < 4; ++k) s.gt_corners(x, y)[k] = depth_at(x + kCorners[k][0], y + kCorners[k][1]);
    }
  s.params = {{"nx", n.x()}, {"ny", n.y()}, {"nz", n.z()}, {"distance", distance}, {"focal", focal}};
  return s;
}

Scene add_gradient_noise(Scene scene, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error("noise sigma must be non-negative");
  if (sigma == 0.0) return scene;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (int y = 0; y < scene.height(); ++y)
    for (int x = 0; x < scene.width(); ++x) {
      if (!scene.normals.mask(x, y)) continue;
      Eigen::Vector3d& n = scene.normals.normals(x, y);
      const double p = n.x() / n.z() + noise(rng);
      const double q = n.y() / n.z() + noise(rng);
      n = Eigen::Vector3d(p, q, 1.0).normalized();
    }
  scene.params["noise_sigma"] = sigma;
  return scene;
}

Scene punch_holes(Scene scene, const HoleSpec& spec, std::uint64_t seed) {
  if (spec.count < 0 || spec.radius < 0.0) throw Error("invalid hole spec");
  if (spec.count == 0) return scene;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, scene.width());
  std::uniform_real_distribution<double> uy(0.0, scene.height());
  const double r2 = spec.radius * spec.radius;
  for (int h = 0; h < spec.count; ++h) {
    const double cx = ux(rng);
    const double cy = uy(rng);
    for (int y = 0; y < scene.height(); ++y)
      for (int x = 0; x < scene.width(); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r2) {
          scene.normals.mask(x, y) = 0;
          scene.gt_depth(x, y) = kNoDepth;
        }
  }
  if (count_masked(scene.normals.mask) == 0) throw Error("holes removed every pixel");
  scene.params["hole_count"] = spec.count;
  scene.params["hole_radius"] = spec.radius;
  return scene;
}

std::vector<double> ground_truth_jumps(const PixelGraph& graph, const Scene& scene) {
  std::vector<double> jumps(graph.aux_edges().size());
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    const AuxEdge& e = graph.aux_edges()[i];
    const auto [ax, ay] = graph.pixel_xy(e.pixel_a);
    const auto [bx, by] = graph.pixel_xy(e.pixel_b);
    jumps[i] = scene.gt_corners(bx, by)[static_cast<int>(PixelGraph::vertex_corner(e.head))] -
               scene.gt_corners(ax, ay)[static_cast<int>(PixelGraph::vertex_corner(e.tail))];
  }
  return jumps;
}

DepthSolution ground_truth_solution(const PixelGraph& graph, const Scene& scene) {
  DepthSolution s;
  s.mode = scene.camera.depth_mode();
  s.values.resize(graph.vertex_count());
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const auto [x, y] = graph.pixel_xy(PixelGraph::vertex_pixel(v));
    const double d = scene.gt_corners(x, y)[static_cast<int>(PixelGraph::vertex_corner(v))];
    s.values[v] = s.mode == DepthMode::Perspective ? std::log(d) : d;
  }
  return s;
}

}  // namespace normint

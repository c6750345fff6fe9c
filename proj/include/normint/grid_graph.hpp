#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "normint/image.hpp"

namespace normint {

struct CameraModel;

enum class Corner : std::uint8_t { NW = 0, NE = 1, SW = 2, SE = 3 };
enum class Axis : std::uint8_t { X = 0, Y = 1 };
enum class DepthMode : std::uint8_t { Orthographic, Perspective };

/// Edge inside one pixel's quadrilateral. x edges run west to east, y edges
/// run north to south (increasing image row).
struct QuadEdge {
  int tail;
  int head;
  int pixel;
  Axis axis;
};

/// Bridge between geometrically coincident corners of two 4-adjacent pixels.
/// pixel_a is the west/north pixel and owns the tail vertex.
struct AuxEdge {
  int tail;
  int head;
  int pixel_a;
  int pixel_b;
  Axis axis;
};

/// Flanking quad edges and collinear auxiliary neighbours of one auxiliary
/// edge. Missing neighbours (mask or image boundary) are -1.
struct AuxNeighbors {
  int quad_a;
  int quad_b;
  int aux_prev;
  int aux_next;
};

struct EdgeId {
  enum class Kind : std::uint8_t { Quad, Aux };
  Kind kind;
  int index;

  static EdgeId quad(int i) { return {Kind::Quad, i}; }
  static EdgeId aux(int i) { return {Kind::Aux, i}; }
};

/// Integration domain: four private depth vertices per masked pixel, four
/// quad edges per pixel and two auxiliary edges per 4-adjacent masked pair.
/// Immutable once built.
class PixelGraph {
 public:
  static constexpr int kNone = -1;

  int width() const { return width_; }
  int height() const { return height_; }
  const Mask& mask() const { return mask_; }

  int pixel_count() const { return static_cast<int>(pixel_xy_.size()); }
  int vertex_count() const { return 4 * pixel_count(); }

  /// Dense pixel id, or kNone when (x, y) is outside the mask.
  int pixel_id(int x, int y) const;
  std::array<int, 2> pixel_xy(int pixel) const { return pixel_xy_[pixel]; }

  static int vertex(int pixel, Corner c) { return 4 * pixel + static_cast<int>(c); }
  static int vertex_pixel(int v) { return v / 4; }
  static Corner vertex_corner(int v) { return static_cast<Corner>(v % 4); }

  /// Corner position in pixel units: pixel (x, y) spans [x - 0.5, x + 0.5] x [y - 0.5, y + 0.5].
  Eigen::Vector2d vertex_position(int v) const;

  const std::vector<QuadEdge>& quad_edges() const { return quad_edges_; }
  const std::vector<AuxEdge>& aux_edges() const { return aux_edges_; }
  const std::vector<AuxNeighbors>& aux_neighbors() const { return aux_neighbors_; }

  /// Quad edge of a pixel: 0 top (x), 1 bottom (x), 2 left (y), 3 right (y).
  static int quad_edge(int pixel, int side) { return 4 * pixel + side; }

  /// 4-connected mask component of each pixel.
  int component_count() const { return component_count_; }
  int pixel_component(int pixel) const { return pixel_component_[pixel]; }

  std::array<int, 2> edge_vertices(EdgeId e) const;

  /// Auxiliary edges incident to a pixel (either side), in ascending id order.
  std::vector<int> incident_aux_edges(int pixel) const;

 private:
  friend PixelGraph build_graph(const Mask& mask);

  int width_ = 0;
  int height_ = 0;
  Mask mask_;
  std::vector<int> pixel_index_;  // width*height, kNone outside mask
  std::vector<std::array<int, 2>> pixel_xy_;
  std::vector<QuadEdge> quad_edges_;
  std::vector<AuxEdge> aux_edges_;
  std::vector<AuxNeighbors> aux_neighbors_;
  // Per pixel: aux ids toward the east (top, bottom) and south (left, right).
  std::vector<std::array<int, 4>> pixel_aux_;
  std::vector<int> pixel_component_;
  int component_count_ = 0;
};

/// Per-vertex depth (or log-depth in perspective mode).
struct DepthSolution {
  Eigen::VectorXd values;
  DepthMode mode = DepthMode::Orthographic;
};

struct QuadMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 4>> faces;
};

/// Throws Error("empty integration domain") when the mask has no pixel set.
PixelGraph build_graph(const Mask& mask);

/// (values[head] - values[tail]) / length; quad edges have unit length and
/// auxiliary edges report the raw jump.
double directional_derivative(const PixelGraph& graph, const DepthSolution& depth, EdgeId edge);

inline double aux_derivative(const PixelGraph& graph, const Eigen::VectorXd& values, int aux) {
  const AuxEdge& e = graph.aux_edges()[aux];
  return values[e.head] - values[e.tail];
}
inline double quad_derivative(const PixelGraph& graph, const Eigen::VectorXd& values, int quad) {
  const QuadEdge& e = graph.quad_edges()[quad];
  return values[e.head] - values[e.tail];
}

/// Mean of the four vertex values per pixel (exponentiated first in
/// perspective mode); kNoDepth outside the mask.
DepthMap average_to_depth_map(const PixelGraph& graph, const DepthSolution& depth);

/// One quad per pixel from the un-averaged vertex depths, back-projected under
/// the camera. Frame: +x right, +y up, +z toward the camera (points at z = -depth).
QuadMesh export_quad_mesh(const PixelGraph& graph, const DepthSolution& depth, const CameraModel& camera);

}  // namespace normint

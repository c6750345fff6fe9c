#include "normint/grid_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "normint/gradient_field.hpp"

namespace normint {

namespace {

constexpr std::array<std::array<double, 2>, 4> kCornerOffset = {{
    {-0.5, -0.5},  // NW
    {+0.5, -0.5},  // NE
    {-0.5, +0.5},  // SW
    {+0.5, +0.5},  // SE
}};

// Pixel-local aux slots.
enum AuxSlot { kEastTop = 0, kEastBottom = 1, kSouthLeft = 2, kSouthRight = 3 };

}  // namespace

int PixelGraph::pixel_id(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return kNone;
  return pixel_index_[static_cast<std::size_t>(y) * width_ + x];
}

Eigen::Vector2d PixelGraph::vertex_position(int v) const {
  const auto [x, y] = pixel_xy_[vertex_pixel(v)];
  const auto& off = kCornerOffset[static_cast<int>(vertex_corner(v))];
  return {x + off[0], y + off[1]};
}

std::array<int, 2> PixelGraph::edge_vertices(EdgeId e) const {
  if (e.kind == EdgeId::Kind::Quad) return {quad_edges_[e.index].tail, quad_edges_[e.index].head};
  return {aux_edges_[e.index].tail, aux_edges_[e.index].head};
}

std::vector<int> PixelGraph::incident_aux_edges(int pixel) const {
  std::vector<int> out;
  const auto [x, y] = pixel_xy_[pixel];
  for (int s : pixel_aux_[pixel])
    if (s != kNone) out.push_back(s);
  if (int w = pixel_id(x - 1, y); w != kNone) {
    for (int s : {kEastTop, kEastBottom})
      if (pixel_aux_[w][s] != kNone) out.push_back(pixel_aux_[w][s]);
  }
  if (int n = pixel_id(x, y - 1); n != kNone) {
    for (int s : {kSouthLeft, kSouthRight})
      if (pixel_aux_[n][s] != kNone) out.push_back(pixel_aux_[n][s]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

PixelGraph build_graph(const Mask& mask) {
  PixelGraph g;
  g.width_ = mask.width();
  g.height_ = mask.height();
  g.mask_ = mask;
  g.pixel_index_.assign(mask.size(), PixelGraph::kNone);

  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) {
        g.pixel_index_[static_cast<std::size_t>(y) * g.width_ + x] = static_cast<int>(g.pixel_xy_.size());
        g.pixel_xy_.push_back({x, y});
      }
  if (g.pixel_xy_.empty()) throw Error("empty integration domain");

  const int n = g.pixel_count();
  using enum Corner;
  g.quad_edges_.reserve(4 * static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    g.quad_edges_.push_back({PixelGraph::vertex(p, NW), PixelGraph::vertex(p, NE), p, Axis::X});
    g.quad_edges_.push_back({PixelGraph::vertex(p, SW), PixelGraph::vertex(p, SE), p, Axis::X});
    g.quad_edges_.push_back({PixelGraph::vertex(p, NW), PixelGraph::vertex(p, SW), p, Axis::Y});
    g.quad_edges_.push_back({PixelGraph::vertex(p, NE), PixelGraph::vertex(p, SE), p, Axis::Y});
  }

  g.pixel_aux_.assign(n, {PixelGraph::kNone, PixelGraph::kNone, PixelGraph::kNone, PixelGraph::kNone});
  for (int p = 0; p < n; ++p) {
    const auto [x, y] = g.pixel_xy_[p];
    if (int q = g.pixel_id(x + 1, y); q != PixelGraph::kNone) {
      g.pixel_aux_[p][kEastTop] = static_cast<int>(g.aux_edges_.size());
      g.aux_edges_.push_back({PixelGraph::vertex(p, NE), PixelGraph::vertex(q, NW), p, q, Axis::X});
      g.pixel_aux_[p][kEastBottom] = static_cast<int>(g.aux_edges_.size());
      g.aux_edges_.push_back({PixelGraph::vertex(p, SE), PixelGraph::vertex(q, SW), p, q, Axis::X});
    }
    if (int q = g.pixel_id(x, y + 1); q != PixelGraph::kNone) {
      g.pixel_aux_[p][kSouthLeft] = static_cast<int>(g.aux_edges_.size());
      g.aux_edges_.push_back({PixelGraph::vertex(p, SW), PixelGraph::vertex(q, NW), p, q, Axis::Y});
      g.pixel_aux_[p][kSouthRight] = static_cast<int>(g.aux_edges_.size());
      g.aux_edges_.push_back({PixelGraph::vertex(p, SE), PixelGraph::vertex(q, NE), p, q, Axis::Y});
    }
  }

  // Flanking quad edges are the parallel edges on the same side in both
  // pixels; collinear neighbours are the same-slot bridges one pixel further
  // along the axis.
  g.aux_neighbors_.resize(g.aux_edges_.size());
  for (int p = 0; p < n; ++p) {
    const auto [x, y] = g.pixel_xy_[p];
    for (int slot = 0; slot < 4; ++slot) {
      const int e = g.pixel_aux_[p][slot];
      if (e == PixelGraph::kNone) continue;
      const AuxEdge& a = g.aux_edges_[e];
      // Quad side: top/bottom for east bridges, left/right for south bridges.
      const int side = slot;  // kEastTop->0 top, kEastBottom->1 bottom, kSouthLeft->2 left, kSouthRight->3 right
      AuxNeighbors nb{PixelGraph::quad_edge(a.pixel_a, side), PixelGraph::quad_edge(a.pixel_b, side),
                      PixelGraph::kNone, PixelGraph::kNone};
      const bool east = slot == kEastTop || slot == kEastBottom;
      const int px = east ? x - 1 : x;
      const int py = east ? y : y - 1;
      if (int prev = g.pixel_id(px, py); prev != PixelGraph::kNone) nb.aux_prev = g.pixel_aux_[prev][slot];
      nb.aux_next = g.pixel_aux_[a.pixel_b][slot];
      g.aux_neighbors_[e] = nb;
    }
  }

  // 4-connected components.
  g.pixel_component_.assign(n, -1);
  std::queue<int> frontier;
  for (int seed = 0; seed < n; ++seed) {
    if (g.pixel_component_[seed] != -1) continue;
    const int label = g.component_count_++;
    g.pixel_component_[seed] = label;
    frontier.push(seed);
    while (!frontier.empty()) {
      const int p = frontier.front();
      frontier.pop();
      const auto [x, y] = g.pixel_xy_[p];
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const int q = g.pixel_id(x + dx, y + dy);
        if (q != PixelGraph::kNone && g.pixel_component_[q] == -1) {
          g.pixel_component_[q] = label;
          frontier.push(q);
        }
      }
    }
  }
  return g;
}

double directional_derivative(const PixelGraph& graph, const DepthSolution& depth, EdgeId edge) {
  return edge.kind == EdgeId::Kind::Quad ? quad_derivative(graph, depth.values, edge.index)
                                         : aux_derivative(graph, depth.values, edge.index);
}

DepthMap average_to_depth_map(const PixelGraph& graph, const DepthSolution& depth) {
  DepthMap out(graph.width(), graph.height(), kNoDepth);
  const bool persp = depth.mode == DepthMode::Perspective;
  for (int p = 0; p < graph.pixel_count(); ++p) {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) {
      const double v = depth.values[4 * p + c];
      sum += persp ? std::exp(v) : v;
    }
    const auto [x, y] = graph.pixel_xy(p);
    out(x, y) = 0.25 * sum;
  }
  return out;
}

QuadMesh export_quad_mesh(const PixelGraph& graph, const DepthSolution& depth, const CameraModel& camera) {
  QuadMesh mesh;
  mesh.vertices.reserve(graph.vertex_count());
  const bool persp = depth.mode == DepthMode::Perspective;
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const Eigen::Vector2d uv = graph.vertex_position(v);
    const double d = persp ? std::exp(depth.values[v]) : depth.values[v];
    if (camera.is_perspective()) {
      mesh.vertices.emplace_back((uv.x() - camera.cu) * d / camera.focal, -(uv.y() - camera.cv) * d / camera.focal,
                                 -d);
    } else {
      mesh.vertices.emplace_back(uv.x(), -uv.y(), -d);
    }
  }
  // Counter-clockwise seen from +z so face normals point at the camera.
  mesh.faces.reserve(graph.pixel_count());
  using enum Corner;
  for (int p = 0; p < graph.pixel_count(); ++p)
    mesh.faces.push_back({PixelGraph::vertex(p, NW), PixelGraph::vertex(p, SW), PixelGraph::vertex(p, SE),
                          PixelGraph::vertex(p, NE)});
  return mesh;
}

}  // namespace normint

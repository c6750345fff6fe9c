#include "normint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace normint {

MadeResult made(const DepthMap& pred, const DepthMap& gt, const Mask& mask, Gauge gauge) {
  if (!pred.same_shape(gt) || !pred.same_shape(mask))
    throw Error("made: dimension mismatch (" + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                " vs " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()) + ")");
  std::vector<double> diff;
  diff.reserve(mask.size());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y) && std::isfinite(pred(x, y)) && std::isfinite(gt(x, y))) diff.push_back(pred(x, y) - gt(x, y));
  if (diff.empty()) throw Error("made: no valid pixels in mask");

  MadeResult r;
  r.pixels = diff.size();
  if (gauge == Gauge::Median) {
    std::vector<double> sorted = diff;
    auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    r.offset = *mid;
  }
  double sum = 0.0;
  for (double d : diff) sum += std::abs(d - r.offset);
  r.made = sum / static_cast<double>(diff.size());
  return r;
}

namespace {

std::array<int, 2> lattice(const PixelGraph& graph, int aux) {
  const Eigen::Vector2d p = graph.vertex_position(graph.aux_edges()[aux].tail);
  return {static_cast<int>(std::lround(p.x() + 0.5)), static_cast<int>(std::lround(p.y() + 0.5))};
}

class LatticeIndex {
 public:
  LatticeIndex(int w, int h) : w_(w + 1), h_(h + 1), hit_(static_cast<std::size_t>(w_) * h_, 0) {}
  void mark(std::array<int, 2> at) { hit_[static_cast<std::size_t>(at[1]) * w_ + at[0]] = 1; }
  bool near(std::array<int, 2> at, int radius) const {
    for (int y = std::max(0, at[1] - radius); y <= std::min(h_ - 1, at[1] + radius); ++y)
      for (int x = std::max(0, at[0] - radius); x <= std::min(w_ - 1, at[0] + radius); ++x)
        if (hit_[static_cast<std::size_t>(y) * w_ + x]) return true;
    return false;
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> hit_;
};

}  // namespace

DiscontinuityScore discontinuity_score(const PixelGraph& graph, const std::vector<double>& gprime,
                                       const std::vector<double>& gt_jumps, double threshold, double tolerance_px) {
  const std::size_t n = graph.aux_edges().size();
  if (gprime.size() != n || gt_jumps.size() != n) throw Error("discontinuity_score: sizes do not match the graph");
  const int radius = static_cast<int>(std::floor(tolerance_px));
  constexpr double kSeamEps = 1e-9;

  LatticeIndex seams(graph.width(), graph.height());
  LatticeIndex detections(graph.width(), graph.height());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(gt_jumps[i]) > kSeamEps) seams.mark(lattice(graph, static_cast<int>(i)));
    if (std::abs(gprime[i]) > threshold) detections.mark(lattice(graph, static_cast<int>(i)));
  }

  DiscontinuityScore s;
  std::size_t hits = 0, recalled = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto at = lattice(graph, static_cast<int>(i));
    if (std::abs(gprime[i]) > threshold) {
      ++s.detected;
      if (seams.near(at, radius)) ++hits;
    }
    if (std::abs(gt_jumps[i]) > threshold) {
      ++s.ground_truth;
      if (detections.near(at, radius)) ++recalled;
    }
  }
  s.precision = s.detected == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(s.detected);
  s.recall = s.ground_truth == 0 ? 1.0 : static_cast<double>(recalled) / static_cast<double>(s.ground_truth);
  return s;
}

double nonzero_fraction(const std::vector<double>& gprime, double eps) {
  if (gprime.empty()) return 0.0;
  std::size_t count = 0;
  for (double g : gprime) count += std::abs(g) > eps ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(gprime.size());
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "MADE " << made << " (offset " << offset << ")";
  if (precision >= 0.0) os << ", precision " << precision << ", recall " << recall;
  if (nonzero_fraction >= 0.0) os << ", nonzero g' " << nonzero_fraction;
  return os.str();
}

std::string EvalReport::to_json_line() const {
  nlohmann::ordered_json j;
  if (!name.empty()) j["name"] = name;
  j["made"] = made;
  j["offset"] = offset;
  if (precision >= 0.0) {
    j["precision"] = precision;
    j["recall"] = recall;
  }
  if (nonzero_fraction >= 0.0) j["nonzero_fraction"] = nonzero_fraction;
  return j.dump();
}

}  // namespace normint

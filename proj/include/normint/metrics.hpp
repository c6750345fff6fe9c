#pragma once

#include <string>
#include <vector>

#include "normint/grid_graph.hpp"
#include "normint/image.hpp"

namespace normint {

enum class Gauge { Median, None };

struct MadeResult {
  double made = 0.0;
  double offset = 0.0;  // subtracted from pred - gt before averaging
  std::size_t pixels = 0;
};

/// Mean absolute depth error over mask after removing the median offset.
/// Pixels whose prediction or ground truth is NaN are skipped.
MadeResult made(const DepthMap& pred, const DepthMap& gt, const Mask& mask, Gauge gauge = Gauge::Median);

struct DiscontinuityScore {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t detected = 0;
  std::size_t ground_truth = 0;
};

/// An auxiliary edge is detected when |g'| > threshold. A detection is a hit
/// when some seam edge lies within `tolerance_px` (Chebyshev, corner lattice);
/// a seam edge with |gt jump| > threshold is recalled when some detection lies
/// within the same distance.
DiscontinuityScore discontinuity_score(const PixelGraph& graph, const std::vector<double>& gprime,
                                       const std::vector<double>& gt_jumps, double threshold,
                                       double tolerance_px = 1.0);

double nonzero_fraction(const std::vector<double>& gprime, double eps);

struct EvalReport {
  std::string name;
  double made = 0.0;
  double offset = 0.0;
  double precision = -1.0;  // negative when not evaluated
  double recall = -1.0;
  double nonzero_fraction = -1.0;

  std::string to_text() const;
  std::string to_json_line() const;
};

}  // namespace normint

#pragma once

#include <filesystem>
#include <vector>

#include "normint/gradient_field.hpp"
#include "normint/grid_graph.hpp"
#include "normint/image.hpp"

namespace normint {

// 16-bit RGB PNG normals: channel c in [0, 65535] <-> component 2c/65535 - 1.
NormalMap read_normal_map(const std::filesystem::path& path);
void write_normal_map(const NormalMap& normals, const std::filesystem::path& path);

// 8-bit grayscale, nonzero = inside.
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const Mask& mask, const std::filesystem::path& path);

// Single-channel little-endian PFM ("Pf", scale -1), rows stored bottom-up.
DepthMap read_depth_pfm(const std::filesystem::path& path);
void write_depth_pfm(const DepthMap& depth, const std::filesystem::path& path);

/// 8-bit RGB "hot" ramp over [lo, hi]; NaN pixels are black.
void write_heatmap_png(const DepthMap& values, double lo, double hi, const std::filesystem::path& path);

/// Per-pixel max |g'| over incident auxiliary edges, mapped linearly from
/// [0, range] to 8-bit gray.
Image<double> gprime_pixel_magnitude(const PixelGraph& graph, const std::vector<double>& gprime);
void write_gprime_png(const PixelGraph& graph, const std::vector<double>& gprime, double range,
                      const std::filesystem::path& path);

/// One "v" per graph vertex and one quad "f" per pixel (1-based indices).
void write_obj(const QuadMesh& mesh, const std::filesystem::path& path);

}  // namespace normint

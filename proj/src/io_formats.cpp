#include "normint/io_formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <png.h>

namespace normint {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw Error("cannot open " + path.string() + ": " + std::strerror(errno));
  return f;
}

// Raw decoded PNG: samples in file order, 8 or 16 bit, 1..4 channels.
struct PngPixels {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int channels = 0;
  int color_type = 0;
  std::vector<std::uint16_t> samples;
};

// libpng reports errors via longjmp; everything with a destructor lives in
// the caller.
bool decode_png(std::FILE* file, PngPixels& out, std::vector<png_byte>& row, char* message) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) {
    std::snprintf(message, 256, "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    std::snprintf(message, 256, "corrupt or unsupported PNG data");
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (out.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  out.channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  out.bit_depth = depth;
  row.resize(png_get_rowbytes(png, info));
  out.samples.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  for (int y = 0; y < out.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    std::uint16_t* dst = out.samples.data() + static_cast<std::size_t>(y) * out.width * out.channels;
    const std::size_t count = static_cast<std::size_t>(out.width) * out.channels;
    for (std::size_t i = 0; i < count; ++i)
      dst[i] = depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]) : row[i];
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

PngPixels read_png(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(path.string() + ": not a PNG file");
  std::rewind(f.get());
  PngPixels pixels;
  std::vector<png_byte> row;
  char message[256] = {0};
  if (!decode_png(f.get(), pixels, row, message)) throw Error(path.string() + ": " + message);
  return pixels;
}

bool encode_png(std::FILE* file, int width, int height, int bit_depth, int color_type, int channels,
                const std::vector<std::uint16_t>& samples, std::vector<png_byte>& row, char* message) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) {
    std::snprintf(message, 256, "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    std::snprintf(message, 256, "PNG encoding failed");
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t count = static_cast<std::size_t>(width) * channels;
  row.resize(count * (bit_depth == 16 ? 2 : 1));
  for (int y = 0; y < height; ++y) {
    const std::uint16_t* src = samples.data() + static_cast<std::size_t>(y) * count;
    for (std::size_t i = 0; i < count; ++i) {
      if (bit_depth == 16) {
        row[2 * i] = static_cast<png_byte>(src[i] >> 8);
        row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
      } else {
        row[i] = static_cast<png_byte>(src[i]);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const fs::path& path, int width, int height, int bit_depth, int channels,
               const std::vector<std::uint16_t>& samples) {
  const int color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  FilePtr f = open_file(path, "wb");
  std::vector<png_byte> row;
  char message[256] = {0};
  if (!encode_png(f.get(), width, height, bit_depth, color_type, channels, samples, row, message))
    throw Error(path.string() + ": " + message);
  if (std::fflush(f.get()) != 0) throw Error("write failed for " + path.string());
}

std::uint16_t encode_component(double c) {
  const double q = std::round((std::clamp(c, -1.0, 1.0) + 1.0) * 0.5 * 65535.0);
  return static_cast<std::uint16_t>(q);
}

std::uint8_t to_byte(double t) { return static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0)); }

}  // namespace

NormalMap read_normal_map(const fs::path& path) {
  const PngPixels png = read_png(path);
  if (png.bit_depth != 16)
    throw Error(path.string() + ": unsupported PNG bit depth " + std::to_string(png.bit_depth) +
                " (normal maps must be 16-bit RGB PNG)");
  if (png.channels < 3)
    throw Error(path.string() + ": normal map PNG must have RGB channels, found " + std::to_string(png.channels));
  NormalMap out(png.width, png.height);
  for (int y = 0; y < png.height; ++y)
    for (int x = 0; x < png.width; ++x) {
      const std::uint16_t* s = png.samples.data() + (static_cast<std::size_t>(y) * png.width + x) * png.channels;
      Eigen::Vector3d n;
      for (int c = 0; c < 3; ++c) n[c] = 2.0 * s[c] / 65535.0 - 1.0;
      out.normals(x, y) = n;
      out.mask(x, y) = png.channels == 4 && s[3] == 0 ? 0 : 1;
    }
  return sanitize_normals(std::move(out));
}

void write_normal_map(const NormalMap& normals, const fs::path& path) {
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(normals.width()) * normals.height() * 3, 0);
  for (int y = 0; y < normals.height(); ++y)
    for (int x = 0; x < normals.width(); ++x) {
      if (!normals.mask(x, y)) continue;  // (0, 0, 0) decodes to n_z = -1: outside
      const Eigen::Vector3d& n = normals.normals(x, y);
      std::uint16_t* dst = samples.data() + (static_cast<std::size_t>(y) * normals.width() + x) * 3;
      for (int c = 0; c < 3; ++c) dst[c] = encode_component(n[c]);
    }
  write_png(path, normals.width(), normals.height(), 16, 3, samples);
}

Mask read_mask_png(const fs::path& path) {
  const PngPixels png = read_png(path);
  Mask mask(png.width, png.height, 0);
  for (int y = 0; y < png.height; ++y)
    for (int x = 0; x < png.width; ++x)
      mask(x, y) = png.samples[(static_cast<std::size_t>(y) * png.width + x) * png.channels] != 0 ? 1 : 0;
  return mask;
}

void write_mask_png(const Mask& mask, const fs::path& path) {
  std::vector<std::uint16_t> samples(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) samples[i] = mask.data()[i] ? 255 : 0;
  write_png(path, mask.width(), mask.height(), 8, 1, samples);
}

DepthMap read_depth_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in) throw Error(path.string() + ": malformed PFM header");
  if (magic == "PF") throw Error(path.string() + ": unsupported PFM variant PF (3-channel); expected Pf");
  if (magic != "Pf") throw Error(path.string() + ": not a PFM file");
  if (width <= 0 || height <= 0 || scale == 0.0) throw Error(path.string() + ": invalid PFM dimensions or scale");
  in.get();  // single whitespace byte ends the header

  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  DepthMap depth(width, height, 0.0);
  std::vector<std::uint32_t> row(width);
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) throw Error(path.string() + ": truncated PFM data");
    for (int x = 0; x < width; ++x) {
      std::uint32_t bits = row[x];
      if (file_little != host_little) bits = __builtin_bswap32(bits);
      depth(x, y) = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  return depth;
}

void write_depth_pfm(const DepthMap& depth, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "Pf\n" << depth.width() << ' ' << depth.height() << "\n-1.0\n";
  std::vector<std::uint32_t> row(depth.width());
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(depth(x, y)));
      if constexpr (std::endian::native != std::endian::little) bits = __builtin_bswap32(bits);
      row[x] = bits;
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw Error("write failed for " + path.string());
}

void write_heatmap_png(const DepthMap& values, double lo, double hi, const fs::path& path) {
  if (!(hi > lo)) throw Error("heatmap range must satisfy lo < hi");
  std::vector<std::uint16_t> samples(values.size() * 3, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (!std::isfinite(v)) continue;
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    samples[3 * i + 0] = to_byte(3.0 * t);
    samples[3 * i + 1] = to_byte(3.0 * t - 1.0);
    samples[3 * i + 2] = to_byte(3.0 * t - 2.0);
  }
  write_png(path, values.width(), values.height(), 8, 3, samples);
}

Image<double> gprime_pixel_magnitude(const PixelGraph& graph, const std::vector<double>& gprime) {
  if (gprime.size() != graph.aux_edges().size()) throw Error("g' does not match the graph");
  Image<double> mag(graph.width(), graph.height(), 0.0);
  for (std::size_t i = 0; i < gprime.size(); ++i) {
    const AuxEdge& e = graph.aux_edges()[i];
    for (int p : {e.pixel_a, e.pixel_b}) {
      const auto [x, y] = graph.pixel_xy(p);
      mag(x, y) = std::max(mag(x, y), std::abs(gprime[i]));
    }
  }
  return mag;
}

void write_gprime_png(const PixelGraph& graph, const std::vector<double>& gprime, double range,
                      const fs::path& path) {
  if (!(range > 0.0)) throw Error("g' image range must be positive");
  const Image<double> mag = gprime_pixel_magnitude(graph, gprime);
  std::vector<std::uint16_t> samples(mag.size());
  for (std::size_t i = 0; i < mag.size(); ++i) samples[i] = to_byte(mag.data()[i] / range);
  write_png(path, mag.width(), mag.height(), 8, 1, samples);
}

void write_obj(const QuadMesh& mesh, const fs::path& path) {
  FilePtr f = open_file(path, "wb");
  char line[160];
  for (const Eigen::Vector3d& v : mesh.vertices) {
    const int n = std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    std::fwrite(line, 1, static_cast<std::size_t>(n), f.get());
  }
  for (const auto& q : mesh.faces) {
    const int n = std::snprintf(line, sizeof line, "f %d %d %d %d\n", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1);
    std::fwrite(line, 1, static_cast<std::size_t>(n), f.get());
  }
  if (std::fflush(f.get()) != 0) throw Error("write failed for " + path.string());
}

}  // namespace normint

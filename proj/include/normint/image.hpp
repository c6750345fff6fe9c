#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace normint {

/// Raised for every recoverable pipeline failure (bad input, I/O, divergence).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major 2D raster. x is the column (u, rightward), y is the row (v, downward).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("negative image dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_shape(int width, int height) const { return width_ == width && height_ == height; }
  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return same_shape(other.width(), other.height());
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Image<std::uint8_t>;
using DepthMap = Image<double>;

/// Sentinel stored in depth maps for pixels outside the integration domain.
inline constexpr double kNoDepth = std::numeric_limits<double>::quiet_NaN();

inline std::size_t count_masked(const Mask& mask) {
  std::size_t n = 0;
  for (auto m : mask.data()) n += m ? 1 : 0;
  return n;
}

}  // namespace normint

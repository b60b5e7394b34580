#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace f3d {

// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
    if (w < 1 || h < 1) fail(Err::InvalidArgument, "image dimensions must be >= 1");
  }

  std::uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  size_t size() const { return data.size(); }
};

// Per-pixel probability in [0, 1].
struct ProbMask {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  ProbMask() = default;
  ProbMask(int w, int h, float fill = 0.f)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
};

// Per-pixel boolean mask.
struct BinMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinMask() = default;
  BinMask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const { return data[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  size_t count() const {
    size_t n = 0;
    for (auto v : data) n += v;
    return n;
  }
};

enum class TrimapLabel : std::uint8_t { Background = 0, Unknown = 128, Foreground = 255 };

struct Trimap {
  int width = 0;
  int height = 0;
  std::vector<TrimapLabel> data;

  Trimap() = default;
  Trimap(int w, int h, TrimapLabel fill = TrimapLabel::Unknown)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  TrimapLabel at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  TrimapLabel& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
};

// BT.601 luminance with round-half-up; pinned so goldens hold across platforms.
inline std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return round_u8(0.299 * r + 0.587 * g + 0.114 * b);
}

// 8-connected digital line between the pixels containing a and b, one step per
// dominant-axis increment (max(dx, dy) + 1 pixels before clipping). Pixels
// outside bounds are dropped; the result as a set does not depend on endpoint
// order.
std::vector<PixelCoord> rasterize_segment(Point2 a, Point2 b, int width, int height);

// Convenience: segment whose support is its own rasterization.
LineSegment make_segment(Point2 a, Point2 b, int width, int height);

// True exactly where prob > threshold.
BinMask threshold_mask(const ProbMask& mask, float threshold);

}  // namespace f3d

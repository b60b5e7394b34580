#include "raster.hpp"

#include <algorithm>
#include <cmath>

namespace f3d {

static PixelCoord containing_pixel(Point2 p) {
  return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
}

std::vector<PixelCoord> rasterize_segment(Point2 a, Point2 b, int width, int height) {
  if (!(dist(a, b) > 0.0)) fail(Err::InvalidArgument, "segment must have positive length");

  // Canonical endpoint order makes reversal symmetry exact.
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);

  PixelCoord p0 = containing_pixel(a);
  PixelCoord p1 = containing_pixel(b);
  int dx = p1.x - p0.x;
  int dy = p1.y - p0.y;
  int steps = std::max(std::abs(dx), std::abs(dy));

  std::vector<PixelCoord> out;
  out.reserve(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    double t = steps == 0 ? 0.0 : static_cast<double>(i) / steps;
    int x = static_cast<int>(std::lround(p0.x + t * dx));
    int y = static_cast<int>(std::lround(p0.y + t * dy));
    if (x >= 0 && x < width && y >= 0 && y < height) {
      if (!out.empty() && out.back().x == x && out.back().y == y) continue;
      out.push_back({x, y});
    }
  }
  return out;
}

LineSegment make_segment(Point2 a, Point2 b, int width, int height) {
  LineSegment s;
  s.a = a;
  s.b = b;
  s.support = rasterize_segment(a, b, width, height);
  return s;
}

BinMask threshold_mask(const ProbMask& mask, float threshold) {
  BinMask out(mask.width, mask.height);
  for (size_t i = 0; i < mask.data.size(); ++i) out.data[i] = mask.data[i] > threshold ? 1 : 0;
  return out;
}

}  // namespace f3d

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace f3d {

// Sub-pixel image coordinates. Pixel (i, j) spans [i, i+1) x [j, j+1) with its
// center at (i + 0.5, j + 0.5); every homography and vanishing-point
// computation uses this convention.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

// Undirected direction of a vector, in degrees within [0, 180).
inline double direction_deg(double dx, double dy) {
  double a = rad2deg(std::atan2(dy, dx));
  a = std::fmod(a, 180.0);
  if (a < 0.0) a += 180.0;
  // fmod can leave 180.0 through rounding.
  if (a >= 180.0) a -= 180.0;
  return a;
}

// Smallest angle between two undirected directions, in [0, 90].
inline double angle_between_deg(double a_deg, double b_deg) {
  double d = std::fabs(a_deg - b_deg);
  d = std::fmod(d, 180.0);
  if (d > 90.0) d = 180.0 - d;
  return d;
}

// A fitted straight segment together with the pixels that support it.
struct LineSegment {
  Point2 a;
  Point2 b;
  std::vector<PixelCoord> support;

  double length() const { return dist(a, b); }
  double direction() const { return direction_deg(b.x - a.x, b.y - a.y); }
  Point2 midpoint() const { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }
};

}  // namespace f3d

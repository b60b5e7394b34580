#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "raster.hpp"

namespace f3d {

struct CannyConfig {
  double lambda = 0.33;   // threshold tightness, in (0,1)
  int sobel_aperture = 3;
};

// Ordered chain of 8-adjacent edge pixels.
struct Contour {
  std::vector<PixelCoord> points;
  bool closed = false;

  size_t size() const { return points.size(); }
};

struct LinearityConfig {
  int k_s = 16;            // window size of the discrete derivative
  double t_alpha = 4.0;    // linearity threshold, degrees

  static LinearityConfig accumulation() { return {16, 4.0}; }
  static LinearityConfig voting() { return {8, 9.0}; }
};

struct RansacConfig {
  std::uint64_t seed = 0;
  double inlier_distance = 1.5;  // px
  int iterations = 64;
  int min_points = 0;  // 0 -> defaults to k_s of the linearity pass
};

// Median-based hysteresis thresholds: l = max(0, median*(1-lambda)),
// u = min(255, median*(1+lambda)).
std::pair<double, double> canny_thresholds(const GrayImage& image, double lambda);

// Standard Canny: Sobel gradients, non-maximum suppression, hysteresis with
// thresholds from canny_thresholds, 8-connected linking.
BinMask detect_edges(const GrayImage& image, const CannyConfig& cfg = {});

// Joins edge pixels into 8-adjacent chains. Every edge pixel lands in exactly
// one contour; pixels with more than two edge neighbors terminate chains, so
// junctions split contours. Isolated single pixels are dropped.
std::vector<Contour> trace_contours(const BinMask& edges);

// Tangent direction at point p, estimated with a centered chord over
// min(k_s, available) points per side. Undirected, degrees in [0, 180).
double point_angle(const Contour& c, int p, int k_s);

// One-sided angle derivatives: L compares the outgoing direction at p with the
// outgoing directions of the previous k_s points, R compares the incoming
// direction at p with the incoming directions of the next k_s points. Both in
// [0, 90] degrees. Throws OutOfWindow when a side has fewer than k_s points.
std::pair<double, double> second_derivatives(const Contour& c, int p,
                                             const LinearityConfig& cfg);

// Per-point linearity: prefix points labeled by the R test, the interior by
// the on-curve hysteresis (leave the curve when R < t_alpha, re-enter when
// L >= t_alpha), suffix by the L test. true = locally linear.
// Throws ContourTooShort when the contour has fewer than 2*k_s points.
std::vector<bool> label_linearity(const Contour& c, const LinearityConfig& cfg);

// Splits the contour at non-linear points and RANSAC-fits one segment per
// maximal linear run of at least min_points pixels. Endpoints are the
// projections of the run's extreme inliers onto the fitted line; support holds
// the inlier pixels. Deterministic for a given seed.
std::vector<LineSegment> fit_segments(const Contour& c, const std::vector<bool>& linear,
                                      const RansacConfig& ransac, int k_s);

// Full detector: edges (optionally restricted to a mask), contours, linearity,
// RANSAC fits. Per-contour RANSAC streams derive from (seed, contour index) so
// processing order cannot change the output.
std::vector<LineSegment> detect_segments(const GrayImage& image, const BinMask* mask,
                                         const CannyConfig& canny, const LinearityConfig& lin,
                                         const RansacConfig& ransac);

// Debug dump: JSON array of {a, b, support_count}.
std::string segments_to_json(const std::vector<LineSegment>& segments);

// Qualitative overlay: segments drawn white over a dimmed copy of the image.
GrayImage render_segment_overlay(const GrayImage& image,
                                 const std::vector<LineSegment>& segments);

}  // namespace f3d

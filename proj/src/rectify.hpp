#pragma once

#include <array>

#include "matting.hpp"
#include "vanish.hpp"

namespace f3d {

// Convex quadrangle bounding a facade mask, aligned with its two vanishing
// points. Corners are ordered top-left, top-right, bottom-right, bottom-left
// in facade orientation (the vp1 pencil is "horizontal").
struct FacadeQuad {
  std::array<Point2, 4> corners;
  VanishingPoint vp1;
  VanishingPoint vp2;
};

struct CameraGuess {
  Point2 principal_point;  // image center
  double focal = 0.0;      // px
  // skew is fixed at zero
};

struct FocalEstimate {
  double focal = 0.0;
  bool approximate = false;  // fallback to the image diagonal
};

// 3x3 homography, row-major, normalized so the bottom-right element is 1 when
// nonzero. Maps source (quad) coordinates to rectified coordinates.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Point2 apply(Point2 p) const {
    double w = m[6] * p.x + m[7] * p.y + m[8];
    return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
  }
  Homography inverse() const;
};

struct RectifiedFacade {
  GrayImage texture;
  AlphaMatte matte;
  double aspect = 1.0;       // width / height
  double world_width = 0.0;  // meters, set by scale_to_world
  double world_height = 0.0;
  FocalEstimate focal;
};

// The smallest quadrangle adhering to the two vanishing points that contains
// every masked pixel: lines from each VP tangent to the mask's convex hull,
// intersected pairwise across the two pencils.
// Throws DegenerateQuad for empty/degenerate masks or ill-conditioned pencils.
FacadeQuad bounding_quadrangle(const BinMask& mask, const VanishingPoint& vp1,
                               const VanishingPoint& vp2);

// f = sqrt(-(v1-p).(v2-p)) from the orthogonality constraint when both VPs are
// finite and the dot product is negative; otherwise falls back to the image
// diagonal and flags the estimate approximate.
FocalEstimate estimate_focal(const VanishingPoint& vp1, const VanishingPoint& vp2,
                             Point2 principal, int image_width, int image_height);

// True width/height ratio of the rectangle whose image is the quadrangle,
// recovered with the single-view plane-rectification formulas and the camera
// guess. Throws NumericallyUnstable near degenerate projections.
double aspect_ratio(const FacadeQuad& quad, const CameraGuess& cam);

// Maps the quad corners exactly onto (0,0)-(aspect*out_height, out_height).
// Throws SingularSystem when corners are collinear.
Homography homography_from_quad(const FacadeQuad& quad, double aspect, int out_height);

// Inverse-mapping warp with bilinear sampling; pixels mapping outside the
// source become fully transparent. The matte is warped with the same H.
RectifiedFacade warp(const GrayImage& image, const AlphaMatte& matte, const Homography& h,
                     int out_width, int out_height);

// Warps a float plane (e.g. an occlusion matte) with the same convention.
AlphaMatte warp_plane(const AlphaMatte& plane, const Homography& h, int out_width,
                      int out_height);

// world_width = given_width, world_height = given_width / aspect.
RectifiedFacade scale_to_world(RectifiedFacade rf, double given_width_m);

// Output height heuristic: the quad's longest side maps to the longest
// output side given the aspect.
int default_out_height(const FacadeQuad& quad, double aspect);

}  // namespace f3d

#include "rectify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace f3d {

namespace {

using Vec3 = Eigen::Vector3d;

Vec3 homogeneous(const VanishingPoint& vp) {
  if (vp.is_finite()) return {vp.position.x, vp.position.y, 1.0};
  double r = deg2rad(vp.direction_deg);
  return {std::cos(r), std::sin(r), 0.0};
}

// Normalizes a line so (l0, l1) is unit length; dot with (x, y, 1) is then a
// signed distance in pixels.
bool normalize_line(Vec3& l) {
  double n = std::hypot(l[0], l[1]);
  if (n < 1e-12) return false;
  l /= n;
  return true;
}

// Convex hull of the mask's pixel rectangles (Andrew's monotone chain over
// per-row extremes), so the quadrangle covers full pixel extents.
std::vector<Point2> mask_hull(const BinMask& mask) {
  std::vector<Point2> pts;
  int minx_all = mask.width, maxx_all = -1, miny_all = mask.height, maxy_all = -1;
  for (int y = 0; y < mask.height; ++y) {
    int minx = mask.width, maxx = -1;
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
      }
    if (maxx < 0) continue;
    pts.push_back({static_cast<double>(minx), static_cast<double>(y)});
    pts.push_back({static_cast<double>(minx), static_cast<double>(y + 1)});
    pts.push_back({static_cast<double>(maxx + 1), static_cast<double>(y)});
    pts.push_back({static_cast<double>(maxx + 1), static_cast<double>(y + 1)});
    minx_all = std::min(minx_all, minx);
    maxx_all = std::max(maxx_all, maxx);
    miny_all = std::min(miny_all, y);
    maxy_all = std::max(maxy_all, y);
  }
  if (pts.empty()) fail(Err::DegenerateQuad, "mask is empty");
  if (maxx_all - minx_all < 1 || maxy_all - miny_all < 1)
    fail(Err::DegenerateQuad, "mask extent too small to bound a quadrangle");

  std::sort(pts.begin(), pts.end(),
            [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  auto cross = [](Point2 o, Point2 a, Point2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Point2> hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// The two extreme lines of the pencil through vp that touch the hull without
// crossing it; the quadrangle they cut is the smallest one adhering to the VP
// that still contains every masked pixel.
std::array<Vec3, 2> tangent_lines(const Vec3& vp, const std::vector<Point2>& hull) {
  std::vector<Vec3> tangents;
  for (const auto& h : hull) {
    Vec3 l = vp.cross(Vec3{h.x, h.y, 1.0});
    if (!normalize_line(l)) continue;
    double mn = 0, mx = 0;
    for (const auto& other : hull) {
      double s = l.dot(Vec3{other.x, other.y, 1.0});
      mn = std::min(mn, s);
      mx = std::max(mx, s);
    }
    const double eps = 1e-6;
    if (mn >= -eps || mx <= eps) {
      bool dup = false;
      for (const auto& t : tangents)
        if ((t - l).norm() < 1e-7 || (t + l).norm() < 1e-7) dup = true;
      if (!dup) tangents.push_back(l);
    }
  }
  if (tangents.size() != 2)
    fail(Err::DegenerateQuad, "vanishing point does not admit two tangent lines");
  return {tangents[0], tangents[1]};
}

Point2 intersect_lines(const Vec3& a, const Vec3& b) {
  Vec3 p = a.cross(b);
  if (std::fabs(p[2]) < 1e-9 * std::max({std::fabs(p[0]), std::fabs(p[1]), 1.0}))
    fail(Err::DegenerateQuad, "near-parallel line pencils");
  return {p[0] / p[2], p[1] / p[2]};
}

Vec3 to_h(Point2 p) { return {p.x, p.y, 1.0}; }

}  // namespace

FacadeQuad bounding_quadrangle(const BinMask& mask, const VanishingPoint& vp1,
                               const VanishingPoint& vp2) {
  std::vector<Point2> hull = mask_hull(mask);
  auto pencil1 = tangent_lines(homogeneous(vp1), hull);
  auto pencil2 = tangent_lines(homogeneous(vp2), hull);

  // corners[i][j]: intersection of vp1 line i with vp2 line j
  Point2 corners[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) corners[i][j] = intersect_lines(pencil1[i], pencil2[j]);

  // vp1 lines play "horizontal": the one whose corners sit higher is the top.
  int top = (corners[0][0].y + corners[0][1].y <= corners[1][0].y + corners[1][1].y) ? 0 : 1;
  int left = (corners[0][0].x + corners[1][0].x <= corners[0][1].x + corners[1][1].x) ? 0 : 1;

  FacadeQuad quad;
  quad.vp1 = vp1;
  quad.vp2 = vp2;
  quad.corners[0] = corners[top][left];            // TL
  quad.corners[1] = corners[top][1 - left];        // TR
  quad.corners[2] = corners[1 - top][1 - left];    // BR
  quad.corners[3] = corners[1 - top][left];        // BL

  // Convexity: consecutive edge cross products must not change sign.
  double sign = 0.0;
  for (int k = 0; k < 4; ++k) {
    Point2 a = quad.corners[k], b = quad.corners[(k + 1) % 4], c = quad.corners[(k + 2) % 4];
    double cr = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    if (std::fabs(cr) < 1e-9) continue;
    if (sign == 0.0) sign = cr;
    else if (sign * cr < 0.0) fail(Err::DegenerateQuad, "bounding quadrangle is not convex");
  }
  return quad;
}

FocalEstimate estimate_focal(const VanishingPoint& vp1, const VanishingPoint& vp2,
                             Point2 principal, int image_width, int image_height) {
  double diagonal = std::hypot(static_cast<double>(image_width), static_cast<double>(image_height));
  if (!vp1.is_finite() || !vp2.is_finite()) return {diagonal, true};
  Point2 d1 = vp1.position - principal;
  Point2 d2 = vp2.position - principal;
  double dp = dot(d1, d2);
  if (dp >= 0.0) return {diagonal, true};
  return {std::sqrt(-dp), false};
}

double aspect_ratio(const FacadeQuad& quad, const CameraGuess& cam) {
  if (!(cam.focal > 0)) fail(Err::InvalidArgument, "camera focal must be positive");
  // m1 = TL, m2 = TR (width direction), m3 = BL (height direction), m4 = BR.
  Vec3 m1 = to_h(quad.corners[0]);
  Vec3 m2 = to_h(quad.corners[1]);
  Vec3 m3 = to_h(quad.corners[3]);
  Vec3 m4 = to_h(quad.corners[2]);

  double den2 = m2.cross(m4).dot(m3);
  double den3 = m3.cross(m4).dot(m2);
  if (std::fabs(den2) < 1e-12 || std::fabs(den3) < 1e-12)
    fail(Err::NumericallyUnstable, "quadrangle corners nearly collinear");
  double k2 = m1.cross(m4).dot(m3) / den2;
  double k3 = m1.cross(m4).dot(m2) / den3;

  Vec3 n2 = k2 * m2 - m1;
  Vec3 n3 = k3 * m3 - m1;

  Eigen::Matrix3d a_inv;
  a_inv << 1.0 / cam.focal, 0, -cam.principal_point.x / cam.focal,
      0, 1.0 / cam.focal, -cam.principal_point.y / cam.focal,
      0, 0, 1;
  Eigen::Matrix3d omega = a_inv.transpose() * a_inv;

  double w2 = n2.dot(omega * n2);
  double w3 = n3.dot(omega * n3);
  if (!(w2 > 0) || !(w3 > 0) || !std::isfinite(w2) || !std::isfinite(w3))
    fail(Err::NumericallyUnstable, "degenerate back-projection");
  double ratio = std::sqrt(w2 / w3);
  if (!std::isfinite(ratio) || !(ratio > 0))
    fail(Err::NumericallyUnstable, "aspect ratio not recoverable");
  return ratio;
}

Homography Homography::inverse() const {
  Eigen::Matrix3d h;
  h << m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8];
  double det = h.determinant();
  if (std::fabs(det) < 1e-15) fail(Err::SingularSystem, "homography is not invertible");
  Eigen::Matrix3d inv = h.inverse();
  Homography out;
  for (int i = 0; i < 9; ++i) out.m[i] = inv(i / 3, i % 3);
  return out;
}

Homography homography_from_quad(const FacadeQuad& quad, double aspect, int out_height) {
  if (!(aspect > 0) || out_height < 1)
    fail(Err::InvalidArgument, "aspect and output height must be positive");
  const double W = aspect * out_height, H = out_height;
  const std::array<Point2, 4> src = quad.corners;
  const std::array<Point2, 4> dst = {Point2{0, 0}, {W, 0}, {W, H}, {0, H}};

  // Hartley-normalized 4-point DLT.
  auto normalizer = [](const std::array<Point2, 4>& pts) {
    Point2 c{0, 0};
    for (auto& p : pts) c = c + p;
    c = 0.25 * c;
    double scale = 0;
    for (auto& p : pts) scale += dist(p, c);
    scale = scale > 1e-12 ? 4.0 * std::sqrt(2.0) / scale : 1.0;
    Eigen::Matrix3d t;
    t << scale, 0, -scale * c.x, 0, scale, -scale * c.y, 0, 0, 1;
    return t;
  };
  Eigen::Matrix3d ts = normalizer(src), td = normalizer(dst);

  Eigen::Matrix<double, 8, 9> a = Eigen::Matrix<double, 8, 9>::Zero();
  for (int k = 0; k < 4; ++k) {
    Vec3 s = ts * Vec3(src[k].x, src[k].y, 1.0);
    Vec3 d = td * Vec3(dst[k].x, dst[k].y, 1.0);
    double x = s[0] / s[2], y = s[1] / s[2];
    double u = d[0] / d[2], v = d[1] / d[2];
    a.row(2 * k) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
    a.row(2 * k + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y, -v;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  Eigen::Matrix<double, 9, 1> hvec = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hvec[0], hvec[1], hvec[2], hvec[3], hvec[4], hvec[5], hvec[6], hvec[7], hvec[8];
  Eigen::Matrix3d h = td.inverse() * hn * ts;

  if (std::fabs(h.determinant()) < 1e-12 * std::pow(h.norm(), 3))
    fail(Err::SingularSystem, "quad corners are collinear");
  if (std::fabs(h(2, 2)) > 1e-12) h /= h(2, 2);

  Homography out;
  for (int i = 0; i < 9; ++i) out.m[i] = h(i / 3, i % 3);
  return out;
}

namespace {

template <typename Fetch>
double bilinear(double sx, double sy, int w, int h, Fetch&& fetch) {
  double u = sx - 0.5, v = sy - 0.5;
  int x0 = static_cast<int>(std::floor(u));
  int y0 = static_cast<int>(std::floor(v));
  double fx = u - x0, fy = v - y0;
  auto clampf = [&](int x, int y) {
    return fetch(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  double top = (1 - fx) * clampf(x0, y0) + fx * clampf(x0 + 1, y0);
  double bot = (1 - fx) * clampf(x0, y0 + 1) + fx * clampf(x0 + 1, y0 + 1);
  return (1 - fy) * top + fy * bot;
}

bool inside_source(double sx, double sy, int w, int h) {
  return sx >= 0.0 && sx <= w && sy >= 0.0 && sy <= h;
}

}  // namespace

AlphaMatte warp_plane(const AlphaMatte& plane, const Homography& h, int out_width,
                      int out_height) {
  Homography inv = h.inverse();
  AlphaMatte out(out_width, out_height, 0.f);
  for (int y = 0; y < out_height; ++y)
    for (int x = 0; x < out_width; ++x) {
      Point2 s = inv.apply({x + 0.5, y + 0.5});
      if (!inside_source(s.x, s.y, plane.width, plane.height)) continue;
      out.at(x, y) = static_cast<float>(bilinear(
          s.x, s.y, plane.width, plane.height, [&](int px, int py) { return plane.at(px, py); }));
    }
  return out;
}

RectifiedFacade warp(const GrayImage& image, const AlphaMatte& matte, const Homography& h,
                     int out_width, int out_height) {
  if (matte.width != image.width || matte.height != image.height)
    fail(Err::DimMismatch, "matte dimensions do not match image");
  Homography inv = h.inverse();

  RectifiedFacade rf;
  rf.texture = GrayImage(out_width, out_height, 0);
  rf.matte = AlphaMatte(out_width, out_height, 0.f);
  for (int y = 0; y < out_height; ++y)
    for (int x = 0; x < out_width; ++x) {
      Point2 s = inv.apply({x + 0.5, y + 0.5});
      if (!inside_source(s.x, s.y, image.width, image.height)) continue;
      rf.texture.at(x, y) = round_u8(bilinear(s.x, s.y, image.width, image.height,
                                              [&](int px, int py) { return image.at(px, py); }));
      rf.matte.at(x, y) = static_cast<float>(bilinear(
          s.x, s.y, matte.width, matte.height, [&](int px, int py) { return matte.at(px, py); }));
    }
  rf.aspect = static_cast<double>(out_width) / out_height;
  return rf;
}

RectifiedFacade scale_to_world(RectifiedFacade rf, double given_width_m) {
  if (!(given_width_m > 0)) fail(Err::InvalidArgument, "facade width must be positive");
  rf.world_width = given_width_m;
  rf.world_height = given_width_m / rf.aspect;
  return rf;
}

int default_out_height(const FacadeQuad& quad, double aspect) {
  double longest = 0;
  for (int k = 0; k < 4; ++k)
    longest = std::max(longest, dist(quad.corners[k], quad.corners[(k + 1) % 4]));
  // The longest quad side sets the longest output side, so nothing is
  // downsampled and nothing blows up.
  double h = aspect > 1.0 ? longest / aspect : longest;
  return std::max(2, static_cast<int>(std::lround(h)));
}

}  // namespace f3d

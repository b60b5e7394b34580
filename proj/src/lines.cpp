#include "lines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <random>
#include <unordered_map>

#include <json.hpp>

namespace f3d {

namespace {

constexpr std::array<int, 8> kDX = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr std::array<int, 8> kDY = {-1, -1, -1, 0, 0, 1, 1, 1};

Point2 pixel_center(PixelCoord p) { return {p.x + 0.5, p.y + 0.5}; }

}  // namespace

std::pair<double, double> canny_thresholds(const GrayImage& image, double lambda) {
  if (image.size() == 0) fail(Err::InvalidArgument, "empty image");
  if (!(lambda > 0.0 && lambda < 1.0)) fail(Err::InvalidArgument, "lambda must be in (0,1)");

  std::array<size_t, 256> hist{};
  for (auto v : image.data) ++hist[v];
  // Lower median: smallest value whose cumulative count reaches half.
  size_t half = (image.size() + 1) / 2;
  size_t cum = 0;
  int median = 0;
  for (int v = 0; v < 256; ++v) {
    cum += hist[v];
    if (cum >= half) {
      median = v;
      break;
    }
  }
  double l = std::max(0.0, median * (1.0 - lambda));
  double u = std::min(255.0, median * (1.0 + lambda));
  return {l, u};
}

BinMask detect_edges(const GrayImage& image, const CannyConfig& cfg) {
  if (cfg.sobel_aperture != 3) fail(Err::InvalidArgument, "only 3x3 Sobel is supported");
  const int w = image.width, h = image.height;
  auto [lo, hi] = canny_thresholds(image, cfg.lambda);

  auto px = [&](int x, int y) {  // replicated border
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return static_cast<int>(image.at(x, y));
  };

  std::vector<float> mag(static_cast<size_t>(w) * h, 0.f);
  std::vector<std::uint8_t> sector(static_cast<size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int gx = px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1) -
               px(x - 1, y - 1) - 2 * px(x - 1, y) - px(x - 1, y + 1);
      int gy = px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1) -
               px(x - 1, y - 1) - 2 * px(x, y - 1) - px(x + 1, y - 1);
      double m = std::hypot(static_cast<double>(gx), static_cast<double>(gy));
      mag[static_cast<size_t>(y) * w + x] = static_cast<float>(m);
      double a = std::atan2(static_cast<double>(gy), static_cast<double>(gx)) * 180.0 / kPi;
      if (a < 0) a += 180.0;
      std::uint8_t s;
      if (a < 22.5 || a >= 157.5) s = 0;       // E-W gradient
      else if (a < 67.5) s = 1;                // NE-SW
      else if (a < 112.5) s = 2;               // N-S
      else s = 3;                              // NW-SE
      sector[static_cast<size_t>(y) * w + x] = s;
    }
  }

  auto mag_at = [&](int x, int y) -> float {
    if (x < 0 || x >= w || y < 0 || y >= h) return 0.f;
    return mag[static_cast<size_t>(y) * w + x];
  };

  // Non-maximum suppression; the >/>= split thins two-pixel plateaus to one.
  BinMask weak(w, h), strong(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float m = mag_at(x, y);
      if (m <= lo) continue;
      float a, b;
      switch (sector[static_cast<size_t>(y) * w + x]) {
        case 0: a = mag_at(x - 1, y); b = mag_at(x + 1, y); break;
        case 1: a = mag_at(x - 1, y - 1); b = mag_at(x + 1, y + 1); break;
        case 2: a = mag_at(x, y - 1); b = mag_at(x, y + 1); break;
        default: a = mag_at(x + 1, y - 1); b = mag_at(x - 1, y + 1); break;
      }
      if (!(m > a && m >= b)) continue;
      weak.set(x, y, true);
      if (m > hi) strong.set(x, y, true);
    }
  }

  // Hysteresis: 8-connected flood from strong pixels through weak ones.
  BinMask out(w, h);
  std::deque<PixelCoord> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (strong.at(x, y)) {
        out.set(x, y, true);
        queue.push_back({x, y});
      }
  while (!queue.empty()) {
    PixelCoord p = queue.front();
    queue.pop_front();
    for (int k = 0; k < 8; ++k) {
      int nx = p.x + kDX[k], ny = p.y + kDY[k];
      if (!out.in_bounds(nx, ny) || out.at(nx, ny) || !weak.at(nx, ny)) continue;
      out.set(nx, ny, true);
      queue.push_back({nx, ny});
    }
  }
  return out;
}

std::vector<Contour> trace_contours(const BinMask& edges) {
  const int w = edges.width, h = edges.height;
  auto at = [&](int x, int y) { return edges.in_bounds(x, y) && edges.at(x, y); };

  std::vector<std::uint8_t> degree(static_cast<size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!edges.at(x, y)) continue;
      int d = 0;
      for (int k = 0; k < 8; ++k) d += at(x + kDX[k], y + kDY[k]) ? 1 : 0;
      degree[static_cast<size_t>(y) * w + x] = static_cast<std::uint8_t>(d);
    }

  std::vector<std::uint8_t> consumed(static_cast<size_t>(w) * h, 0);
  auto idx = [w](PixelCoord p) { return static_cast<size_t>(p.y) * w + p.x; };
  auto deg = [&](PixelCoord p) { return degree[idx(p)]; };
  auto taken = [&](PixelCoord p) { return consumed[idx(p)] != 0; };
  auto take = [&](PixelCoord p) { consumed[idx(p)] = 1; };

  std::vector<Contour> out;

  // Walks from cur (unconsumed) away from prev, consuming pixels; stops at
  // junctions (claiming them when still free), dead ends and consumed pixels.
  auto walk = [&](PixelCoord prev, PixelCoord cur, std::vector<PixelCoord>& chain) {
    while (true) {
      chain.push_back(cur);
      take(cur);
      if (deg(cur) >= 3) return;
      PixelCoord next{-1, -1};
      bool found = false;
      for (int k = 0; k < 8 && !found; ++k) {
        PixelCoord n{cur.x + kDX[k], cur.y + kDY[k]};
        if (!at(n.x, n.y) || (n == prev) || taken(n)) continue;
        next = n;
        found = true;
      }
      if (!found) return;
      prev = cur;
      cur = next;
    }
  };

  auto emit = [&](std::vector<PixelCoord>&& pts, bool closed) {
    if (pts.size() < 2) return;  // leftovers pass may still rescue singletons
    Contour c;
    c.points = std::move(pts);
    c.closed = closed;
    out.push_back(std::move(c));
  };

  // Pass 1: open chains from endpoints.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      PixelCoord p{x, y};
      if (!edges.at(x, y) || taken(p) || deg(p) != 1) continue;
      std::vector<PixelCoord> chain{p};
      take(p);
      for (int k = 0; k < 8; ++k) {
        PixelCoord n{x + kDX[k], y + kDY[k]};
        if (at(n.x, n.y) && !taken(n)) {
          walk(p, n, chain);
          break;
        }
      }
      emit(std::move(chain), false);
    }

  // Pass 2: arms seeded from junctions (covers junction-to-junction runs).
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      PixelCoord p{x, y};
      if (!edges.at(x, y) || deg(p) < 3) continue;
      for (int k = 0; k < 8; ++k) {
        PixelCoord n{x + kDX[k], y + kDY[k]};
        if (!at(n.x, n.y) || taken(n) || deg(n) >= 3) continue;
        std::vector<PixelCoord> chain;
        if (!taken(p)) {
          chain.push_back(p);
          take(p);
        }
        walk(p, n, chain);
        emit(std::move(chain), false);
      }
    }

  // Pass 3: the rest of the degree-2 pixels form pure cycles.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      PixelCoord p{x, y};
      if (!edges.at(x, y) || taken(p) || deg(p) != 2) continue;
      std::vector<PixelCoord> chain{p};
      take(p);
      for (int k = 0; k < 8; ++k) {
        PixelCoord n{x + kDX[k], y + kDY[k]};
        if (at(n.x, n.y) && !taken(n)) {
          walk(p, n, chain);
          break;
        }
      }
      bool closed = chain.size() >= 3 &&
                    std::abs(chain.front().x - chain.back().x) <= 1 &&
                    std::abs(chain.front().y - chain.back().y) <= 1;
      emit(std::move(chain), closed);
    }

  // Pass 4: leftover pixels (junction clusters) attach to an adjacent chain
  // end; anything still isolated is dropped.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      PixelCoord p{x, y};
      if (!edges.at(x, y) || taken(p)) continue;
      bool attached = false;
      for (auto& c : out) {
        auto adj = [&](PixelCoord q) {
          return std::abs(q.x - p.x) <= 1 && std::abs(q.y - p.y) <= 1 && !(q == p);
        };
        if (adj(c.points.back())) {
          c.points.push_back(p);
          take(p);
          attached = true;
          break;
        }
        if (adj(c.points.front())) {
          c.points.insert(c.points.begin(), p);
          take(p);
          attached = true;
          break;
        }
      }
      if (!attached) take(p);  // isolated pixel, dropped
    }

  return out;
}

namespace {

int wrap_index(const Contour& c, int q) {
  int n = static_cast<int>(c.size());
  return ((q % n) + n) % n;
}

double chord_direction(const Contour& c, int from, int to) {
  PixelCoord a = c.points[wrap_index(c, from)], b = c.points[wrap_index(c, to)];
  return direction_deg(b.x - a.x, b.y - a.y);
}

// Incoming direction at q: chord arriving from k_s points behind. Closed
// contours wrap; open chains clamp the window and fall back to the other side
// at the very ends.
double chord_in(const Contour& c, int q, int k_s) {
  int n = static_cast<int>(c.size());
  if (c.closed) return chord_direction(c, q - k_s, q);
  int h = std::min(k_s, q);
  if (h > 0) return chord_direction(c, q - h, q);
  int fwd = std::min(k_s, n - 1 - q);
  return fwd > 0 ? chord_direction(c, q, q + fwd) : 0.0;
}

// Outgoing direction at q: chord leaving toward k_s points ahead.
double chord_out(const Contour& c, int q, int k_s) {
  int n = static_cast<int>(c.size());
  if (c.closed) return chord_direction(c, q, q + k_s);
  int h = std::min(k_s, n - 1 - q);
  if (h > 0) return chord_direction(c, q, q + h);
  int back = std::min(k_s, q);
  return back > 0 ? chord_direction(c, q - back, q) : 0.0;
}

double left_second_derivative(const Contour& c, int p, const LinearityConfig& cfg) {
  double ref = chord_out(c, p, cfg.k_s);
  double sum = 0.0;
  for (int d = 1; d <= cfg.k_s; ++d) sum += angle_between_deg(ref, chord_out(c, p - d, cfg.k_s));
  return sum / cfg.k_s;
}

double right_second_derivative(const Contour& c, int p, const LinearityConfig& cfg) {
  double ref = chord_in(c, p, cfg.k_s);
  double sum = 0.0;
  for (int d = 1; d <= cfg.k_s; ++d) sum += angle_between_deg(ref, chord_in(c, p + d, cfg.k_s));
  return sum / cfg.k_s;
}

}  // namespace

double point_angle(const Contour& c, int p, int k_s) {
  int n = static_cast<int>(c.size());
  if (p < 0 || p >= n) fail(Err::InvalidArgument, "point index outside contour");
  if (c.closed) return chord_direction(c, p - k_s, p + k_s);
  int hm = std::min(k_s, p);
  int hp = std::min(k_s, n - 1 - p);
  if (hm + hp == 0) return 0.0;
  return chord_direction(c, p - hm, p + hp);
}

std::pair<double, double> second_derivatives(const Contour& c, int p,
                                             const LinearityConfig& cfg) {
  int n = static_cast<int>(c.size());
  if (!c.closed && (p < cfg.k_s || p + cfg.k_s > n - 1))
    fail(Err::OutOfWindow, "fewer than k_s contour points on one side of p");
  return {left_second_derivative(c, p, cfg), right_second_derivative(c, p, cfg)};
}

std::vector<bool> label_linearity(const Contour& c, const LinearityConfig& cfg) {
  const int n = static_cast<int>(c.size());
  const int k = cfg.k_s;
  if (n < 2 * k) fail(Err::ContourTooShort, "contour shorter than 2*k_s");

  std::vector<bool> linear(n, true);
  if (c.closed) {
    // No boundary sweeps on a cycle: both windows wrap. Two passes of the
    // hysteresis settle the state carried across the seam.
    bool oncurve = true;
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < n; ++i) {
        if (oncurve && right_second_derivative(c, i, cfg) < cfg.t_alpha) oncurve = false;
        if (!oncurve && left_second_derivative(c, i, cfg) >= cfg.t_alpha) oncurve = true;
        linear[i] = !oncurve;
      }
    return linear;
  }

  // Prefix: only the right-hand derivative exists.
  for (int i = 0; i < k; ++i) linear[i] = right_second_derivative(c, i, cfg) < cfg.t_alpha;
  // Interior: on-curve hysteresis.
  bool oncurve = true;
  for (int i = k; i < n - k; ++i) {
    if (oncurve && right_second_derivative(c, i, cfg) < cfg.t_alpha) oncurve = false;
    if (!oncurve && left_second_derivative(c, i, cfg) >= cfg.t_alpha) oncurve = true;
    linear[i] = !oncurve;
  }
  // Suffix: only the left-hand derivative exists.
  for (int i = n - k; i < n; ++i) linear[i] = left_second_derivative(c, i, cfg) < cfg.t_alpha;
  return linear;
}

namespace {

struct LineEq {  // unit normal form: nx*x + ny*y = d
  double nx, ny, d;
  double dist(Point2 p) const { return std::fabs(nx * p.x + ny * p.y - d); }
};

LineEq line_through(Point2 a, Point2 b) {
  double dx = b.x - a.x, dy = b.y - a.y;
  double len = std::hypot(dx, dy);
  LineEq l{-dy / len, dx / len, 0.0};
  l.d = l.nx * a.x + l.ny * a.y;
  return l;
}

// Portable bounded draw (stdlib distributions vary across implementations).
std::uint32_t bounded(std::mt19937_64& rng, std::uint32_t n) {
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::uint32_t>(v % n);
}

// Total-least-squares line through a point set.
LineEq tls_line(const std::vector<Point2>& pts) {
  double mx = 0, my = 0;
  for (auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (auto& p : pts) {
    double dx = p.x - mx, dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);  // principal direction
  double dx = std::cos(theta), dy = std::sin(theta);
  LineEq l{-dy, dx, 0.0};
  l.d = l.nx * mx + l.ny * my;
  return l;
}

}  // namespace

std::vector<LineSegment> fit_segments(const Contour& c, const std::vector<bool>& linear,
                                      const RansacConfig& ransac, int k_s) {
  if (linear.size() != c.size()) fail(Err::DimMismatch, "label count does not match contour");
  const int min_points = std::max(2, ransac.min_points > 0 ? ransac.min_points : k_s);

  std::vector<LineSegment> out;
  std::mt19937_64 rng(ransac.seed);

  size_t i = 0;
  while (i < c.size()) {
    if (!linear[i]) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < c.size() && linear[j]) ++j;
    const int len = static_cast<int>(j - i);
    if (len >= min_points) {
      std::vector<Point2> pts(len);
      for (int q = 0; q < len; ++q) pts[q] = pixel_center(c.points[i + q]);

      int best_count = -1;
      LineEq best{1, 0, 0};
      for (int it = 0; it < ransac.iterations; ++it) {
        int i1 = static_cast<int>(bounded(rng, len));
        int i2 = static_cast<int>(bounded(rng, len - 1));
        if (i2 >= i1) ++i2;
        if (dist(pts[i1], pts[i2]) < 1e-9) continue;
        LineEq cand = line_through(pts[i1], pts[i2]);
        int count = 0;
        for (auto& p : pts)
          if (cand.dist(p) <= ransac.inlier_distance) ++count;
        if (count > best_count) {
          best_count = count;
          best = cand;
        }
      }
      if (best_count >= 2) {
        // Refit on consensus, then take final inliers against the refit line.
        std::vector<Point2> inliers;
        for (auto& p : pts)
          if (best.dist(p) <= ransac.inlier_distance) inliers.push_back(p);
        LineEq refit = tls_line(inliers);

        LineSegment seg;
        double dirx = refit.ny, diry = -refit.nx;  // along-line direction
        double tmin = 0, tmax = 0;
        bool first = true;
        Point2 origin{refit.nx * refit.d, refit.ny * refit.d};
        for (int q = 0; q < len; ++q) {
          if (refit.dist(pts[q]) > ransac.inlier_distance) continue;
          seg.support.push_back(c.points[i + q]);
          double t = (pts[q].x - origin.x) * dirx + (pts[q].y - origin.y) * diry;
          if (first || t < tmin) tmin = t;
          if (first || t > tmax) tmax = t;
          first = false;
        }
        if (seg.support.size() >= 2 && tmax - tmin > 1e-9) {
          seg.a = {origin.x + tmin * dirx, origin.y + tmin * diry};
          seg.b = {origin.x + tmax * dirx, origin.y + tmax * diry};
          out.push_back(std::move(seg));
        }
      }
    }
    i = j;
  }
  return out;
}

std::vector<LineSegment> detect_segments(const GrayImage& image, const BinMask* mask,
                                         const CannyConfig& canny, const LinearityConfig& lin,
                                         const RansacConfig& ransac) {
  BinMask edges = detect_edges(image, canny);
  if (mask) {
    if (mask->width != edges.width || mask->height != edges.height)
      fail(Err::DimMismatch, "mask dimensions do not match image");
    for (size_t i = 0; i < edges.data.size(); ++i) edges.data[i] &= mask->data[i];
  }
  std::vector<Contour> contours = trace_contours(edges);

  std::vector<LineSegment> segments;
  for (size_t ci = 0; ci < contours.size(); ++ci) {
    const Contour& c = contours[ci];
    if (static_cast<int>(c.size()) < 2 * lin.k_s) continue;
    std::vector<bool> labels = label_linearity(c, lin);
    RansacConfig rc = ransac;
    rc.seed = mix_seed(ransac.seed, ci);
    auto segs = fit_segments(c, labels, rc, lin.k_s);
    segments.insert(segments.end(), segs.begin(), segs.end());
  }
  return segments;
}

std::string segments_to_json(const std::vector<LineSegment>& segments) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : segments) {
    arr.push_back({{"a", {s.a.x, s.a.y}},
                   {"b", {s.b.x, s.b.y}},
                   {"support_count", s.support.size()}});
  }
  return arr.dump();
}

GrayImage render_segment_overlay(const GrayImage& image,
                                 const std::vector<LineSegment>& segments) {
  GrayImage out = image;
  for (auto& v : out.data) v /= 2;
  for (const auto& s : segments)
    for (auto p : rasterize_segment(s.a, s.b, out.width, out.height)) out.at(p.x, p.y) = 255;
  return out;
}

}  // namespace f3d

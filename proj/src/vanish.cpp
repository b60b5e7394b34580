#include "vanish.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <tuple>

#include <json.hpp>

namespace f3d {

double VoteConfig::half_diagonal() const {
  return 0.5 * std::hypot(static_cast<double>(image_width), static_cast<double>(image_height));
}

double VoteConfig::pos_bin() const {
  if (quant_pos > 0) return quant_pos;
  double hd = half_diagonal();
  return hd > 0 ? deg2rad(angle_bin()) / hd : deg2rad(angle_bin());
}

namespace {

// Circular mean of undirected directions (doubled-angle trick).
double mean_direction(double a_deg, double b_deg) {
  double a2 = deg2rad(2.0 * a_deg), b2 = deg2rad(2.0 * b_deg);
  double m = std::atan2(0.5 * (std::sin(a2) + std::sin(b2)),
                        0.5 * (std::cos(a2) + std::cos(b2)));
  double d = rad2deg(m) / 2.0;
  if (d < 0) d += 180.0;
  if (d >= 180.0) d -= 180.0;
  return d;
}

// Supporting line in unit-normal form nx*x + ny*y = d.
struct LineEq {
  double nx, ny, d;
};

LineEq support_line(const LineSegment& s) {
  double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
  double len = std::hypot(dx, dy);
  LineEq l{-dy / len, dx / len, 0.0};
  l.d = l.nx * s.a.x + l.ny * s.a.y;
  return l;
}

// Deterministic dedup order: first occurrence per quantized key.
struct CandidateKey {
  int kind;
  long long q1;
  long long q2;
  auto operator<=>(const CandidateKey&) const = default;
};

}  // namespace

std::vector<VanishingPoint> accumulate_candidates(const std::vector<LineSegment>& segments,
                                                  const VoteConfig& cfg) {
  if (segments.size() < 2)
    fail(Err::InsufficientSegments, "need at least two segments to accumulate candidates");

  const Point2 center = cfg.center();
  const double abin = cfg.angle_bin();
  const double pbin = cfg.pos_bin();

  std::vector<VanishingPoint> out;
  std::map<CandidateKey, bool> seen;

  auto push_unique = [&](const VanishingPoint& vp) {
    CandidateKey key{};
    if (vp.is_finite()) {
      if (!cfg.dedup_finite) {
        out.push_back(vp);
        return;
      }
      double dx = vp.position.x - center.x, dy = vp.position.y - center.y;
      double r = std::hypot(dx, dy);
      double theta = rad2deg(std::atan2(dy, dx));
      if (theta < 0) theta += 360.0;
      double invd = 1.0 / std::max(r, 1e-6);
      key = {0, static_cast<long long>(std::floor(theta / abin)),
             static_cast<long long>(std::floor(invd / pbin))};
    } else {
      if (!cfg.dedup_infinite) {
        out.push_back(vp);
        return;
      }
      key = {1, static_cast<long long>(std::floor(vp.direction_deg / abin)), 0};
    }
    if (seen.emplace(key, true).second) out.push_back(vp);
  };

  for (size_t i = 0; i < segments.size(); ++i) {
    for (size_t j = i + 1; j < segments.size(); ++j) {
      double di = segments[i].direction(), dj = segments[j].direction();
      if (angle_between_deg(di, dj) < cfg.t_a) {
        push_unique(VanishingPoint::infinite(mean_direction(di, dj)));
        continue;
      }
      LineEq li = support_line(segments[i]), lj = support_line(segments[j]);
      // Homogeneous intersection of (nx, ny, -d) lines.
      double x = li.ny * -lj.d - -li.d * lj.ny;
      double y = -li.d * lj.nx - li.nx * -lj.d;
      double w2 = li.nx * lj.ny - li.ny * lj.nx;
      if (std::fabs(w2) < 1e-12) {
        push_unique(VanishingPoint::infinite(mean_direction(di, dj)));
        continue;
      }
      push_unique(VanishingPoint::finite({x / w2, y / w2}));
    }
  }
  return out;
}

std::vector<LineSegment> dedup_collinear(const std::vector<LineSegment>& segments,
                                         const VoteConfig& cfg) {
  const Point2 center = cfg.center();
  const double abin = cfg.angle_bin();
  const double rho_bin = std::max(1e-9, deg2rad(cfg.angle_bin()) * std::max(cfg.half_diagonal(), 1.0));

  // Supporting lines agree when both the direction and the signed offset from
  // the image center sit within the quantization bounds; union-find makes the
  // merge transitive.
  const size_t n = segments.size();
  std::vector<double> theta(n), rho(n);
  for (size_t i = 0; i < n; ++i) {
    LineEq l = support_line(segments[i]);
    theta[i] = segments[i].direction();
    rho[i] = l.d - (l.nx * center.x + l.ny * center.y);
  }
  std::vector<size_t> parent(n);
  for (size_t i = 0; i < n; ++i) parent[i] = i;
  std::function<size_t(size_t)> find = [&](size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      if (angle_between_deg(theta[i], theta[j]) >= abin) continue;
      // The signed offset flips when the direction wraps past 180.
      double rj = rho[j];
      if (std::fabs(theta[i] - theta[j]) > 90.0) rj = -rj;
      if (std::fabs(rho[i] - rj) >= rho_bin) continue;
      size_t a = find(i), b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }

  std::map<size_t, std::vector<size_t>> groups;  // root -> members, ordered
  for (size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

  std::vector<LineSegment> out;
  out.reserve(groups.size());
  for (const auto& [root, idxs] : groups) {
    if (idxs.size() == 1) {
      out.push_back(segments[idxs[0]]);
      continue;
    }
    LineSegment merged;
    std::vector<Point2> pts;
    for (size_t i : idxs) {
      const auto& s = segments[i];
      for (auto p : s.support) pts.push_back({p.x + 0.5, p.y + 0.5});
      merged.support.insert(merged.support.end(), s.support.begin(), s.support.end());
    }
    if (pts.empty())
      for (size_t i : idxs) {
        pts.push_back(segments[i].a);
        pts.push_back(segments[i].b);
      }
    // Merged direction by total least squares; extent by endpoint projection.
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
    double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    double dx = std::cos(theta), dy = std::sin(theta);
    double tmin = 0, tmax = 0;
    bool first = true;
    for (size_t i : idxs) {
      for (Point2 e : {segments[i].a, segments[i].b}) {
        double t = (e.x - mx) * dx + (e.y - my) * dy;
        if (first || t < tmin) tmin = t;
        if (first || t > tmax) tmax = t;
        first = false;
      }
    }
    merged.a = {mx + tmin * dx, my + tmin * dy};
    merged.b = {mx + tmax * dx, my + tmax * dy};
    out.push_back(std::move(merged));
  }
  return out;
}

double distance(const VanishingPoint& a, const LineSegment& s) {
  if (!(s.length() > 0)) fail(Err::InvalidArgument, "segment must have positive length");
  double seg_dir = s.direction();
  if (!a.is_finite()) return angle_between_deg(seg_dir, a.direction_deg);
  Point2 mid = s.midpoint();
  double dx = a.position.x - mid.x, dy = a.position.y - mid.y;
  if (std::hypot(dx, dy) < 1e-12) return 0.0;  // midpoint at the VP
  return angle_between_deg(seg_dir, direction_deg(dx, dy));
}

namespace {

double mask_fraction(const LineSegment& s, const BinMask& mask) {
  if (s.support.empty()) return 0.0;
  size_t inside = 0;
  for (auto p : s.support)
    if (mask.in_bounds(p.x, p.y) && mask.at(p.x, p.y)) ++inside;
  return static_cast<double>(inside) / static_cast<double>(s.support.size());
}

}  // namespace

double vote(const VanishingPoint& a, const std::vector<LineSegment>& segments,
            const BinMask& mask, const VoteConfig& cfg) {
  if (segments.empty()) fail(Err::InsufficientSegments, "no segments to vote with");
  double num = 0.0, den = 0.0;
  for (const auto& s : segments) {
    double weight = s.length() * mask_fraction(s, mask);
    if (weight <= 0.0) continue;
    den += weight;
    num += weight * std::max(0.0, 1.0 - distance(a, s) / cfg.t_a);
  }
  if (den <= 0.0) fail(Err::NoEvidence, "no segment support inside the mask");
  return num / den;
}

double direction_from(const VanishingPoint& vp, Point2 from) {
  if (!vp.is_finite()) return vp.direction_deg;
  return direction_deg(vp.position.x - from.x, vp.position.y - from.y);
}

Point2 mask_centroid(const BinMask& mask) {
  double sx = 0, sy = 0;
  size_t n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
  if (n == 0) fail(Err::NoEvidence, "empty mask has no centroid");
  return {sx / n, sy / n};
}

namespace {

// Deterministic tie order: kind, then position / direction.
bool lex_less(const VanishingPoint& a, const VanishingPoint& b) {
  if (a.kind != b.kind) return a.kind == VanishingPoint::Kind::Finite;
  if (a.is_finite())
    return std::tie(a.position.x, a.position.y) < std::tie(b.position.x, b.position.y);
  return a.direction_deg < b.direction_deg;
}

}  // namespace

std::pair<ScoredVP, ScoredVP> select_vp_pair(const std::vector<VanishingPoint>& candidates,
                                             const std::vector<LineSegment>& segments,
                                             const BinMask& mask, const VoteConfig& cfg) {
  if (candidates.size() < 2)
    fail(Err::InsufficientSegments, "need at least two candidates to select a pair");
  if (segments.empty()) fail(Err::InsufficientSegments, "no segments to vote with");

  // Same scoring as vote(), with the mask weights hoisted out of the loop.
  std::vector<double> weights(segments.size());
  double den = 0.0;
  for (size_t i = 0; i < segments.size(); ++i) {
    weights[i] = segments[i].length() * mask_fraction(segments[i], mask);
    den += weights[i];
  }
  if (den <= 0.0) fail(Err::NoEvidence, "no segment support inside the mask");

  std::vector<ScoredVP> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    double num = 0.0;
    for (size_t i = 0; i < segments.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      num += weights[i] * std::max(0.0, 1.0 - distance(c, segments[i]) / cfg.t_a);
    }
    scored.push_back({c, num / den});
  }

  auto better = [](const ScoredVP& a, const ScoredVP& b) {
    if (a.score != b.score) return a.score > b.score;
    return lex_less(a.vp, b.vp);
  };
  std::stable_sort(scored.begin(), scored.end(), better);

  const ScoredVP& first = scored[0];
  Point2 centroid = mask_centroid(mask);
  double dir_first = direction_from(first.vp, centroid);
  for (size_t i = 1; i < scored.size(); ++i) {
    double offset = angle_between_deg(dir_first, direction_from(scored[i].vp, centroid));
    if (offset >= cfg.t_o) return {first, scored[i]};
  }
  fail(Err::NoOrthogonalPair, "no second candidate at least t_o degrees offset");
}

std::string ReductionReport::to_json() const {
  auto entry = [](const ReductionEntry& e) {
    return nlohmann::json{{"space_pct", e.space_pct()},
                          {"time_pct", e.time_pct()},
                          {"before_count", e.before_count},
                          {"after_count", e.after_count},
                          {"before_ms", e.before_ms},
                          {"after_ms", e.after_ms}};
  };
  nlohmann::json j{{"collinear", entry(collinear)},
                   {"infinite", entry(infinite)},
                   {"combined", entry(combined)}};
  return j.dump();
}

}  // namespace f3d

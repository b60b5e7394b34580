#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "vanish.hpp"

using namespace f3d;

namespace {

VoteConfig config_for(int w, int h) {
  VoteConfig cfg;
  cfg.image_width = w;
  cfg.image_height = h;
  return cfg;
}

LineSegment seg(double ax, double ay, double bx, double by, int w = 400, int h = 400) {
  return make_segment({ax, ay}, {bx, by}, w, h);
}

}  // namespace

TEST_CASE("accumulate_candidates: perpendicular pair gives one finite candidate") {
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> s{seg(10, 100, 90, 100), seg(200, 10, 200, 90)};
  auto cands = accumulate_candidates(s, cfg);
  REQUIRE(cands.size() == 1);
  REQUIRE(cands[0].is_finite());
  CHECK(cands[0].position.x == doctest::Approx(200.0));
  CHECK(cands[0].position.y == doctest::Approx(100.0));
}

TEST_CASE("accumulate_candidates: parallel horizontals give one infinite candidate at 0") {
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> s{seg(10, 100, 200, 100), seg(10, 300, 200, 300)};
  auto cands = accumulate_candidates(s, cfg);
  REQUIRE(cands.size() == 1);
  CHECK_FALSE(cands[0].is_finite());
  CHECK(cands[0].direction_deg == doctest::Approx(0.0));
}

TEST_CASE("accumulate_candidates: insufficient segments") {
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> s{seg(10, 100, 90, 100)};
  CHECK_THROWS_AS(accumulate_candidates(s, cfg), Error);
}

TEST_CASE("accumulate_candidates: concurrent pencil deduplicates far below pair count") {
  // 10 segments through one pixel: 45 pairs, all meeting near (270, 130).
  auto cfg = config_for(400, 400);
  const double px = 270, py = 130;
  std::vector<LineSegment> s;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    double ang = deg2rad(i * 17.0 + 5.0);
    double r = 80 + (rng() % 60);
    s.push_back(seg(px - r * std::cos(ang), py - r * std::sin(ang), px + r * std::cos(ang),
                    py + r * std::sin(ang)));
  }
  // Brute-force pairwise oracle: all intersections cluster at the pixel.
  auto cands = accumulate_candidates(s, cfg);
  CHECK(cands.size() < 45 / 4);
  for (const auto& c : cands) {
    if (c.is_finite()) {
      CHECK(std::fabs(c.position.x - px) < 2.0);
      CHECK(std::fabs(c.position.y - py) < 2.0);
    }
  }
}

TEST_CASE("dedup_collinear merges touching collinear segments with summed support") {
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> s{seg(10, 50, 60, 50), seg(60, 50, 120, 50)};
  size_t support_total = s[0].support.size() + s[1].support.size();
  auto out = dedup_collinear(s, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].support.size() == support_total);
  CHECK(out[0].length() == doctest::Approx(110.0).epsilon(0.01));

  std::vector<LineSegment> perp{seg(10, 50, 60, 50), seg(30, 10, 30, 90)};
  CHECK(dedup_collinear(perp, cfg).size() == 2);
}

TEST_CASE("dedup_collinear halves a 50%-duplicated corpus") {
  auto cfg = config_for(1000, 1000);
  std::mt19937_64 rng(11);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * (rng() % 10000) / 10000.0; };

  // Base segments kept mutually distinct beyond the merge bounds, so the only
  // merges are the constructed duplicates.
  struct Base {
    double cx, cy, ang;
  };
  std::vector<Base> bases;
  while (bases.size() < 50) {
    Base b{uniform(100, 900), uniform(100, 900), deg2rad(uniform(0, 180))};
    bool distinct = true;
    for (const auto& o : bases) {
      double dang = angle_between_deg(rad2deg(b.ang), rad2deg(o.ang));
      double doff = std::hypot(b.cx - o.cx, b.cy - o.cy);
      if (dang < 3.0 * cfg.angle_bin() && doff < 150) distinct = false;
    }
    if (distinct) bases.push_back(b);
  }

  std::vector<LineSegment> s;
  for (const auto& base : bases) {
    double len = uniform(60, 150);
    Point2 a{base.cx - len / 2 * std::cos(base.ang), base.cy - len / 2 * std::sin(base.ang)};
    Point2 b{base.cx + len / 2 * std::cos(base.ang), base.cy + len / 2 * std::sin(base.ang)};
    s.push_back(make_segment(a, b, 1000, 1000));
    // Jittered duplicate of the same supporting line (+-0.2 deg).
    double ang2 = base.ang + deg2rad(uniform(-0.2, 0.2));
    Point2 a2{base.cx - len / 2 * std::cos(ang2), base.cy - len / 2 * std::sin(ang2)};
    Point2 b2{base.cx + len / 2 * std::cos(ang2), base.cy + len / 2 * std::sin(ang2)};
    s.push_back(make_segment(a2, b2, 1000, 1000));
  }
  auto out = dedup_collinear(s, cfg);
  // Known duplication rate: reduction within [45%, 55%].
  double reduction = 100.0 * (1.0 - static_cast<double>(out.size()) / s.size());
  CHECK(reduction >= 45.0);
  CHECK(reduction <= 55.0);
}

TEST_CASE("distance function cases") {
  // Finite VP on the segment's extension: collinear, distance 0.
  LineSegment s1 = seg(100, 100, 200, 100);
  CHECK(distance(VanishingPoint::finite({400, 100}), s1) == doctest::Approx(0.0));

  // Infinite VP orthogonal to the segment.
  CHECK(distance(VanishingPoint::infinite(90.0), s1) == doctest::Approx(90.0));

  // VP at origin, segment from (10,-1) to (10,1): midpoint (10,0), angle 90.
  LineSegment s2;
  s2.a = {10, -1};
  s2.b = {10, 1};
  CHECK(distance(VanishingPoint::finite({0, 0}), s2) == doctest::Approx(90.0));

  // Midpoint at the VP is defined as zero.
  CHECK(distance(VanishingPoint::finite({10, 0}), s2) == doctest::Approx(0.0));
}

TEST_CASE("vote: perfect match and half match per the weighting definition") {
  BinMask mask(400, 400, true);
  auto cfg = config_for(400, 400);

  LineSegment a = seg(100, 200, 200, 200);
  CHECK(vote(VanishingPoint::infinite(0.0), {a}, mask, cfg) == doctest::Approx(1.0));

  // Two equal-length in-mask segments, one aligned, one at >= t_a.
  LineSegment b = seg(100, 300, 200, 300);
  LineSegment c;
  c.a = {300, 100};
  c.b = {300, 200};
  c.support = rasterize_segment(c.a, c.b, 400, 400);
  CHECK(vote(VanishingPoint::infinite(0.0), {b, c}, mask, cfg) == doctest::Approx(0.5));
}

TEST_CASE("vote: all segments outside the mask is NoEvidence") {
  BinMask mask(400, 400, false);
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> s{seg(100, 200, 200, 200)};
  try {
    vote(VanishingPoint::infinite(0.0), s, mask, cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::NoEvidence);
  }
}

TEST_CASE("vote matches the direct-summation oracle to 1e-9") {
  std::mt19937_64 rng(17);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * (rng() % 100000) / 100000.0; };
  BinMask mask(300, 300);
  for (int y = 60; y < 240; ++y)
    for (int x = 40; x < 260; ++x) mask.set(x, y, true);
  auto cfg = config_for(300, 300);

  std::vector<LineSegment> segs;
  for (int i = 0; i < 8; ++i)
    segs.push_back(seg(uniform(0, 300), uniform(0, 300), uniform(0, 300), uniform(0, 300), 300, 300));

  for (int c = 0; c < 20; ++c) {
    VanishingPoint vp = (c % 3 == 0)
                            ? VanishingPoint::infinite(uniform(0, 180))
                            : VanishingPoint::finite({uniform(-500, 800), uniform(-500, 800)});
    double expect = oracle::direct_vote(vp, segs, mask, cfg.t_a);
    if (expect < 0) continue;
    CHECK(std::fabs(vote(vp, segs, mask, cfg) - expect) < 1e-9);
  }
}

TEST_CASE("vote invariants: duplicated evidence, monotonicity") {
  BinMask mask(400, 400, true);
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> s{seg(100, 100, 250, 120), seg(50, 300, 220, 280), seg(300, 50, 320, 200)};
  VanishingPoint vp = VanishingPoint::finite({700, 150});

  double base = vote(vp, s, mask, cfg);
  std::vector<LineSegment> doubled = s;
  doubled.insert(doubled.end(), s.begin(), s.end());
  CHECK(vote(vp, doubled, mask, cfg) == doctest::Approx(base).epsilon(1e-12));

  // Rotating one in-mask segment away from the VP never raises the score.
  double prev = 1e9;
  for (double off : {0.0, 0.5, 1.0, 1.5, 2.5}) {
    LineSegment probe;
    double ang = deg2rad(off);
    Point2 mid{200, 200};
    Point2 dir{std::cos(ang), std::sin(ang)};
    // Segment whose midpoint-to-VP line is horizontal; tilting it by `off`
    // degrees makes d(a, s) = off exactly.
    VanishingPoint right = VanishingPoint::finite({600, 200});
    probe.a = mid - 50 * dir;
    probe.b = mid + 50 * dir;
    probe.support = rasterize_segment(probe.a, probe.b, 400, 400);
    double score = vote(right, {probe}, mask, cfg);
    CHECK(score <= prev + 1e-12);
    prev = score;
  }
}

TEST_CASE("distance stays in [0, 90] under reflection") {
  std::mt19937_64 rng(23);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * (rng() % 100000) / 100000.0; };
  for (int i = 0; i < 200; ++i) {
    LineSegment s;
    s.a = {uniform(-100, 500), uniform(-100, 500)};
    s.b = {uniform(-100, 500), uniform(-100, 500)};
    if (dist(s.a, s.b) < 1e-6) continue;
    VanishingPoint vp = (i % 2) ? VanishingPoint::finite({uniform(-1000, 1000), uniform(-1000, 1000)})
                                : VanishingPoint::infinite(uniform(0, 180));
    double d = distance(vp, s);
    CHECK(d >= 0.0);
    CHECK(d <= 90.0);

    // Mirror the scene about the y axis.
    LineSegment sm;
    sm.a = {-s.a.x, s.a.y};
    sm.b = {-s.b.x, s.b.y};
    VanishingPoint vpm = vp.is_finite()
                             ? VanishingPoint::finite({-vp.position.x, vp.position.y})
                             : VanishingPoint::infinite(180.0 - vp.direction_deg);
    CHECK(distance(vpm, sm) == doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("select_vp_pair: axis-aligned grid picks the two infinite pencils") {
  BinMask mask(400, 400, true);
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> segs;
  for (int k = 1; k <= 4; ++k) {
    segs.push_back(seg(50, 70 * k, 350, 70 * k));  // horizontals
    segs.push_back(seg(70 * k, 50, 70 * k, 350));  // verticals
  }
  auto cands = accumulate_candidates(segs, cfg);
  auto [first, second] = select_vp_pair(cands, segs, mask, cfg);
  REQUIRE_FALSE(first.vp.is_finite());
  REQUIRE_FALSE(second.vp.is_finite());
  CHECK(first.vp.direction_deg == doctest::Approx(0.0));
  CHECK(second.vp.direction_deg == doctest::Approx(90.0));
  // Each pencil holds half the evidence, so each tops out at 0.5 by the
  // percent-of-evidence weighting (verified against the direct oracle).
  double expect_first = oracle::direct_vote(first.vp, segs, mask, cfg.t_a);
  CHECK(first.score == doctest::Approx(expect_first).epsilon(1e-12));
  CHECK(first.score == doctest::Approx(0.5));
  CHECK(second.score == doctest::Approx(0.5));
}

TEST_CASE("select_vp_pair: no second candidate beyond t_o") {
  BinMask mask(400, 400, true);
  auto cfg = config_for(400, 400);
  std::vector<LineSegment> segs{seg(50, 100, 350, 100), seg(50, 140, 350, 141),
                                seg(50, 200, 350, 202)};
  // Candidates all within t_o of each other.
  std::vector<VanishingPoint> cands{VanishingPoint::infinite(0.0), VanishingPoint::infinite(10.0),
                                    VanishingPoint::infinite(20.0)};
  try {
    select_vp_pair(cands, segs, mask, cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::NoOrthogonalPair);
  }
}

TEST_CASE("select_vp_pair recovers the pencils of a rendered grid facade") {
  // A known camera looks at a planar grid; the projected grid segments vote.
  auto cam = oracle::PinholeCamera::looking_at_plane(25.0, 10.0, 5.0, 900, 800, 600);
  auto cfg = config_for(800, 600);

  std::vector<LineSegment> segs;
  BinMask mask(800, 600);
  for (int r = 0; r <= 6; ++r) {
    Point2 a = cam.project({-1.5, -1.0 + r / 3.0, 0});
    Point2 b = cam.project({1.5, -1.0 + r / 3.0, 0});
    segs.push_back(make_segment(a, b, 800, 600));
  }
  for (int c = 0; c <= 8; ++c) {
    Point2 a = cam.project({-1.5 + c * 3.0 / 8.0, -1.0, 0});
    Point2 b = cam.project({-1.5 + c * 3.0 / 8.0, 1.0, 0});
    segs.push_back(make_segment(a, b, 800, 600));
  }
  for (const auto& s : segs)
    for (auto p : s.support) mask.set(p.x, p.y, true);

  VanishingPoint true_h = cam.vanishing_point({1, 0, 0});
  VanishingPoint true_v = cam.vanishing_point({0, 1, 0});

  auto cands = accumulate_candidates(segs, cfg);
  auto [first, second] = select_vp_pair(cands, segs, mask, cfg);

  Point2 centroid = mask_centroid(mask);
  double dh = direction_from(true_h, centroid);
  double dv = direction_from(true_v, centroid);
  double d1 = direction_from(first.vp, centroid);
  double d2 = direction_from(second.vp, centroid);
  bool matches = (angle_between_deg(d1, dh) < cfg.t_a && angle_between_deg(d2, dv) < cfg.t_a) ||
                 (angle_between_deg(d1, dv) < cfg.t_a && angle_between_deg(d2, dh) < cfg.t_a);
  CHECK(matches);
}

TEST_CASE("dedup keeps the selected pair within the quantization bound") {
  auto cam = oracle::PinholeCamera::looking_at_plane(-30.0, 15.0, 6.0, 1000, 800, 600);
  auto cfg = config_for(800, 600);
  std::mt19937_64 rng(31);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * (rng() % 10000) / 10000.0; };

  std::vector<LineSegment> segs;
  BinMask mask(800, 600);
  for (int r = 0; r <= 6; ++r)
    segs.push_back(make_segment(cam.project({-1.5, -1.0 + r / 3.0, 0}),
                                cam.project({1.5, -1.0 + r / 3.0, 0}), 800, 600));
  for (int c = 0; c <= 6; ++c)
    segs.push_back(make_segment(cam.project({-1.5 + c * 0.5, -1.0, 0}),
                                cam.project({-1.5 + c * 0.5, 1.0, 0}), 800, 600));
  // Duplicate half the segments with tiny jitter.
  size_t base_count = segs.size();
  for (size_t i = 0; i < base_count; i += 2) {
    LineSegment d = segs[i];
    d.a.x += uniform(-0.3, 0.3);
    d.b.y += uniform(-0.3, 0.3);
    d.support = rasterize_segment(d.a, d.b, 800, 600);
    segs.push_back(d);
  }
  for (const auto& s : segs)
    for (auto p : s.support) mask.set(p.x, p.y, true);

  VoteConfig no_dedup = cfg;
  no_dedup.dedup_finite = false;
  no_dedup.dedup_infinite = false;

  auto base_c = accumulate_candidates(segs, no_dedup);
  auto dedup_c = accumulate_candidates(dedup_collinear(segs, cfg), cfg);
  CHECK(dedup_c.size() < base_c.size());

  auto pair_base = select_vp_pair(base_c, segs, mask, cfg);
  auto pair_dedup = select_vp_pair(dedup_c, segs, mask, cfg);
  Point2 centroid = mask_centroid(mask);
  CHECK(angle_between_deg(direction_from(pair_base.first.vp, centroid),
                          direction_from(pair_dedup.first.vp, centroid)) < cfg.angle_bin());
}

TEST_CASE("reduction report percentages") {
  ReductionEntry e;
  e.before_count = 100;
  e.after_count = 56;
  CHECK(e.space_pct() == doctest::Approx(44.0));
  e.after_count = 100;
  CHECK(e.space_pct() == doctest::Approx(0.0));

  ReductionReport rr;
  rr.combined.before_count = 200;
  rr.combined.after_count = 110;
  auto json_text = rr.to_json();
  CHECK(json_text.find("\"combined\"") != std::string::npos);
  CHECK(json_text.find("\"collinear\"") != std::string::npos);
  CHECK(json_text.find("\"infinite\"") != std::string::npos);
  CHECK(rr.combined.space_pct() == doctest::Approx(45.0));
}

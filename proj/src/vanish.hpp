#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "raster.hpp"

namespace f3d {

// A vanishing point is a finite image position (possibly far outside the
// image) or a direction at infinity, undirected in [0, 180).
struct VanishingPoint {
  enum class Kind { Finite, Infinite };
  Kind kind = Kind::Finite;
  Point2 position;              // Finite only
  double direction_deg = 0.0;   // Infinite only

  static VanishingPoint finite(Point2 p) { return {Kind::Finite, p, 0.0}; }
  static VanishingPoint infinite(double dir_deg) {
    double d = std::fmod(dir_deg, 180.0);
    if (d < 0) d += 180.0;
    return {Kind::Infinite, {}, d};
  }
  bool is_finite() const { return kind == Kind::Finite; }
};

struct ScoredVP {
  VanishingPoint vp;
  double score = 0.0;  // in [0, 1]
};

struct VoteConfig {
  double t_a = 2.0;         // alignment threshold, degrees
  double t_o = 45.0;        // minimum offset between the chosen pair, degrees
  double quant_angle = 0.0; // dedup angular bin; 0 -> t_a
  double quant_pos = 0.0;   // dedup positional bin, inverse px; 0 -> t_a rad / half-diagonal
  int image_width = 0;      // needed for the dedup frame (image center)
  int image_height = 0;
  bool dedup_finite = true;    // quantized dedup of finite candidates
  bool dedup_infinite = true;  // quantized dedup of infinite candidates

  double angle_bin() const { return quant_angle > 0 ? quant_angle : t_a; }
  double half_diagonal() const;
  double pos_bin() const;   // inverse-distance units
  Point2 center() const { return {image_width / 2.0, image_height / 2.0}; }
};

// One candidate per unordered segment pair: the intersection of the two
// supporting lines, or an infinite direction when the pair is near-parallel
// (angle difference < t_a). Candidates are deduplicated by quantization.
// Throws InsufficientSegments when fewer than two segments are given.
std::vector<VanishingPoint> accumulate_candidates(const std::vector<LineSegment>& segments,
                                                  const VoteConfig& cfg);

// Merges segments whose supporting lines agree within the quantization bins
// into one segment spanning the union extent, with merged support lists.
std::vector<LineSegment> dedup_collinear(const std::vector<LineSegment>& segments,
                                         const VoteConfig& cfg);

// Rother's angular misfit between a candidate and a segment, in [0, 90]:
// finite VPs measure the angle between the segment and the line joining the VP
// to the segment midpoint; infinite VPs measure the direction difference.
double distance(const VanishingPoint& a, const LineSegment& s);

// vote(a, S, m) = sum(len*omega*max(0, 1 - d/t_a)) / sum(len*omega), where
// omega is the fraction of the segment's support pixels inside the mask.
// Throws NoEvidence when the denominator vanishes.
double vote(const VanishingPoint& a, const std::vector<LineSegment>& segments,
            const BinMask& mask, const VoteConfig& cfg);

// Highest-voted candidate plus the best candidate whose direction seen from
// the mask centroid is at least t_o degrees away from the first.
std::pair<ScoredVP, ScoredVP> select_vp_pair(const std::vector<VanishingPoint>& candidates,
                                             const std::vector<LineSegment>& segments,
                                             const BinMask& mask, const VoteConfig& cfg);

// Search-space / wall-time reduction instrumentation (one row per dedup mode).
struct ReductionEntry {
  std::uint64_t before_count = 0;
  std::uint64_t after_count = 0;
  double before_ms = 0.0;
  double after_ms = 0.0;

  double space_pct() const {
    return before_count == 0
               ? 0.0
               : 100.0 * (1.0 - static_cast<double>(after_count) / before_count);
  }
  double time_pct() const {
    return before_ms <= 0.0 ? 0.0 : 100.0 * (1.0 - after_ms / before_ms);
  }
};

struct ReductionReport {
  ReductionEntry collinear;
  ReductionEntry infinite;
  ReductionEntry combined;

  std::string to_json() const;
};

// Direction (degrees, mod 180) from an observation point toward a VP.
double direction_from(const VanishingPoint& vp, Point2 from);

// Centroid of the true pixels of a mask (pixel centers).
Point2 mask_centroid(const BinMask& mask);

}  // namespace f3d

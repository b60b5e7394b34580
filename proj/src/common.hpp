#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace f3d {

enum class Err {
  Ok = 0,
  UnreadableFile,
  UnsupportedFormat,
  InvalidArgument,
  DegenerateTrimap,
  SolverDiverged,
  OutOfWindow,
  ContourTooShort,
  InsufficientSegments,
  NoEvidence,
  NoOrthogonalPair,
  DegenerateQuad,
  NumericallyUnstable,
  SingularSystem,
  NoSourcePatch,
  OpenChain,
  NonPositiveDim,
  DimMismatch,
  WriteFailure,
  ManifestError,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

// Round-half-up to an 8-bit level, clamped.
inline std::uint8_t round_u8(double v) {
  double r = std::floor(v + 0.5);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<std::uint8_t>(r);
}

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Bit mixer used to derive per-item RNG streams from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace f3d

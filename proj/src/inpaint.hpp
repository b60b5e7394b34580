#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "raster.hpp"

namespace f3d {

// true mask pixels are the ones to synthesize.
struct InpaintRequest {
  GrayImage image;
  BinMask mask;
};

struct TilerConfig {
  int context_radius = 100;
  int max_chunk_width = 600;
  int max_chunk_height = 400;
};

struct DiffusionOptions {
  int max_iterations = 20000;
  double tolerance = 1e-3;  // max per-pixel change, 0..255 scale
  double sor_omega = 1.9;
};

struct PatchOptions {
  int min_patch = 50;
  int max_patch = 73;
  int search_area = 100;
  std::uint64_t seed = 0;
};

// Inpainted image plus non-fatal notes (e.g. isolated regions filled with the
// global mean).
struct InpaintOutcome {
  GrayImage image;
  std::vector<std::string> notes;
};

using InpaintBackend = std::function<InpaintOutcome(const InpaintRequest&)>;

// Harmonic fill: masked pixels relax toward the mean of their neighbors until
// the largest per-pixel change drops below tolerance. Unmasked pixels are
// bit-identical to the input. Masked components with no unmasked neighbor are
// filled with the global unmasked mean and flagged.
InpaintOutcome inpaint_diffusion(const InpaintRequest& req, const DiffusionOptions& opt = {});

// Exemplar fill: onion-peel from the mask boundary inward, copying the
// masked part of the best-matching source patch (SSD over known pixels) found
// within search_area. Deterministic for a given seed.
// Throws NoSourcePatch when no fully-valid source patch exists.
InpaintOutcome inpaint_patch(const InpaintRequest& req, const PatchOptions& opt = {});

struct InpaintSlice {
  int x = 0, y = 0, width = 0, height = 0;  // placement in the full image
  InpaintRequest request;
};

// Mask-component bounding boxes dilated by context_radius, merged when they
// overlap, and grid-split with context_radius overlap when they exceed
// max_chunk. The union of slice masks equals the original mask.
std::vector<InpaintSlice> split_for_inpaint(const InpaintRequest& req, const TilerConfig& cfg);

struct TiledStats {
  int slice_count = 0;
  std::int64_t peak_slice_area = 0;
  int backend_calls = 0;
};

// Low-memory driver: slices are inpainted independently and composited back;
// pixels covered by several slices blend with distance-to-border weights.
// Backend failures are re-thrown tagged with the slice id.
InpaintOutcome inpaint_tiled(const InpaintRequest& req, const InpaintBackend& backend,
                             const TilerConfig& cfg, TiledStats* stats = nullptr);

struct InpaintMetrics {
  double l1_mean = 0.0;  // mean |diff|/255 over masked pixels
  double l2_mean = 0.0;  // mean (diff/255)^2 over masked pixels
  double wall_time_ms = 0.0;
  int slice_count = 0;
  std::int64_t peak_slice_area = 0;

  std::string to_json() const;
};

// Per-pixel losses against a reference, over the masked region.
void masked_losses(const GrayImage& reference, const GrayImage& result, const BinMask& mask,
                   double* l1, double* l2);

// Free-form evaluation masks: seeded random walks with varying brush width.
// params_json receives the generator parameters for reproducibility.
BinMask make_freeform_mask(int width, int height, std::uint64_t seed, int strokes = 4,
                           std::string* params_json = nullptr);

}  // namespace f3d

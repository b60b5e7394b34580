#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inpaint.hpp"
#include "lines.hpp"
#include "matting.hpp"
#include "model3d.hpp"
#include "rectify.hpp"
#include "vanish.hpp"

namespace f3d {

struct ManifestFacade {
  std::string id;
  std::string image_path;
  std::string facade_mask_path;
  std::vector<std::string> occlusion_mask_paths;
  double width_m = 0.0;
  std::string block_id;
  std::string neighbor_id;
  bool same_building = false;
  int cardinal = 0;
};

struct ManifestBlock {
  std::string id;
  double offset_x = 0.0;
  double offset_y = 0.0;
};

struct PipelineConfig {
  MattingConfig matting;
  CannyConfig canny;
  LinearityConfig linearity_accumulation = LinearityConfig::accumulation();
  LinearityConfig linearity_voting = LinearityConfig::voting();
  RansacConfig ransac;
  VoteConfig vote;
  TilerConfig tiler;
  DiffusionOptions diffusion;
  PatchOptions patch;
  int out_height = 0;  // 0 -> quad's longest side
};

struct SceneManifest {
  std::vector<ManifestFacade> facades;
  std::vector<ManifestBlock> blocks;
  PipelineConfig config;

  // Parses and validates: files exist, widths positive, per-block neighbor
  // links form a single cycle. Throws ManifestError naming the offender.
  static SceneManifest load(const std::string& path);
  static SceneManifest from_json_text(const std::string& text, const std::string& base_dir);
};

// Parses a bare config-override object (the manifest's "config" section).
PipelineConfig pipeline_config_from_json_text(const std::string& text);

enum class InpaintBackendKind { Diffusion, Patch };

struct RunFlags {
  bool debug = false;
  std::uint64_t seed = 0;
  InpaintBackendKind backend = InpaintBackendKind::Diffusion;
  bool dedup = true;
  bool metrics = false;
  int workers = 0;  // 0 -> hardware concurrency
};

struct FacadeReport {
  std::string id;
  bool ok = false;
  std::string error;
  std::map<std::string, double> timings_ms;
  int segment_count = 0;
  int candidate_count = 0;
  double aspect = 0.0;
  double focal = 0.0;
  bool approximate_focal = false;
  double world_width = 0.0;
  double world_height = 0.0;
  InpaintMetrics inpaint;
  std::vector<std::string> warnings;
};

struct BlockReport {
  std::string id;
  bool ok = false;
  double closure_gap_m = 0.0;
  bool adjusted = false;
  int cuboid_count = 0;
  int cardinal_turns = 0;
};

struct RunReport {
  std::vector<FacadeReport> facades;
  std::vector<BlockReport> blocks;
  std::optional<ReductionReport> vp_reduction;
  std::vector<std::string> warnings;
  std::string gltf_path;
  std::uint64_t seed = 0;
  bool partial = false;

  std::string to_json(int indent = 2) const;
};

// The end-to-end run: per facade matting, line detection inside the facade
// matte, vanishing-point selection, quadrangle, rectification, occlusion
// inpainting through the tiler, world scaling; then block assembly and glTF
// export. Per-facade failures are isolated; only manifest problems are fatal.
RunReport run_pipeline(const SceneManifest& manifest, const std::string& out_dir,
                       const RunFlags& flags);

RunReport run_pipeline(const std::string& manifest_path, const std::string& out_dir,
                       const RunFlags& flags);

}  // namespace f3d

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pipeline.hpp"

namespace f3d {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void manifest_fail(const std::string& msg) { fail(Err::ManifestError, msg); }

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PipelineConfig parse_config(const json& j) {
  PipelineConfig cfg;
  if (j.contains("matting")) {
    const auto& m = j.at("matting");
    maybe(m, "fg_threshold", cfg.matting.fg_threshold);
    maybe(m, "bg_threshold", cfg.matting.bg_threshold);
    maybe(m, "window_radius", cfg.matting.window_radius);
    maybe(m, "epsilon", cfg.matting.epsilon);
    maybe(m, "solver_tolerance", cfg.matting.solver_tolerance);
    maybe(m, "max_iterations", cfg.matting.max_iterations);
    maybe(m, "binarize_threshold", cfg.matting.binarize_threshold);
  }
  if (j.contains("canny")) {
    const auto& c = j.at("canny");
    maybe(c, "lambda", cfg.canny.lambda);
    maybe(c, "sobel_aperture", cfg.canny.sobel_aperture);
  }
  if (j.contains("linearity_accumulation")) {
    const auto& l = j.at("linearity_accumulation");
    maybe(l, "k_s", cfg.linearity_accumulation.k_s);
    maybe(l, "t_alpha", cfg.linearity_accumulation.t_alpha);
  }
  if (j.contains("linearity_voting")) {
    const auto& l = j.at("linearity_voting");
    maybe(l, "k_s", cfg.linearity_voting.k_s);
    maybe(l, "t_alpha", cfg.linearity_voting.t_alpha);
  }
  if (j.contains("ransac")) {
    const auto& r = j.at("ransac");
    maybe(r, "inlier_distance", cfg.ransac.inlier_distance);
    maybe(r, "iterations", cfg.ransac.iterations);
    maybe(r, "min_points", cfg.ransac.min_points);
  }
  if (j.contains("vote")) {
    const auto& v = j.at("vote");
    maybe(v, "t_a", cfg.vote.t_a);
    maybe(v, "t_o", cfg.vote.t_o);
    maybe(v, "quant_angle", cfg.vote.quant_angle);
    maybe(v, "quant_pos", cfg.vote.quant_pos);
  }
  if (j.contains("tiler")) {
    const auto& t = j.at("tiler");
    maybe(t, "context_radius", cfg.tiler.context_radius);
    maybe(t, "max_chunk_width", cfg.tiler.max_chunk_width);
    maybe(t, "max_chunk_height", cfg.tiler.max_chunk_height);
  }
  if (j.contains("diffusion")) {
    const auto& d = j.at("diffusion");
    maybe(d, "max_iterations", cfg.diffusion.max_iterations);
    maybe(d, "tolerance", cfg.diffusion.tolerance);
  }
  if (j.contains("patch")) {
    const auto& p = j.at("patch");
    maybe(p, "min_patch", cfg.patch.min_patch);
    maybe(p, "max_patch", cfg.patch.max_patch);
    maybe(p, "search_area", cfg.patch.search_area);
  }
  maybe(j, "out_height", cfg.out_height);
  return cfg;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / path).string();
}

}  // namespace

SceneManifest SceneManifest::from_json_text(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    manifest_fail(std::string("manifest is not valid JSON: ") + e.what());
  }

  SceneManifest m;
  if (!j.contains("facades") || !j.at("facades").is_array() || j.at("facades").empty())
    manifest_fail("manifest needs a non-empty 'facades' array");

  std::set<std::string> ids;
  for (const auto& f : j.at("facades")) {
    ManifestFacade mf;
    try {
      mf.id = f.at("id").get<std::string>();
      mf.image_path = resolve(base_dir, f.at("image").get<std::string>());
      mf.facade_mask_path = resolve(base_dir, f.at("facade_mask").get<std::string>());
      if (f.contains("occlusion_masks"))
        for (const auto& o : f.at("occlusion_masks"))
          mf.occlusion_mask_paths.push_back(resolve(base_dir, o.get<std::string>()));
      mf.width_m = f.at("width_m").get<double>();
      mf.block_id = f.at("block").get<std::string>();
      mf.neighbor_id = f.at("neighbor").get<std::string>();
      maybe(f, "same_building", mf.same_building);
      maybe(f, "cardinal", mf.cardinal);
    } catch (const json::exception& e) {
      manifest_fail("facade entry is missing a field: " + std::string(e.what()));
    }
    if (!(mf.width_m > 0)) manifest_fail("facade " + mf.id + " has non-positive width");
    if (mf.cardinal < 0 || mf.cardinal > 3) manifest_fail("facade " + mf.id + " cardinal not in {0,1,2,3}");
    if (!ids.insert(mf.id).second) manifest_fail("duplicate facade id " + mf.id);
    m.facades.push_back(std::move(mf));
  }

  if (!j.contains("blocks") || !j.at("blocks").is_array())
    manifest_fail("manifest needs a 'blocks' array");
  std::set<std::string> block_ids;
  for (const auto& b : j.at("blocks")) {
    ManifestBlock mb;
    try {
      mb.id = b.at("id").get<std::string>();
      maybe(b, "offset_x", mb.offset_x);
      maybe(b, "offset_y", mb.offset_y);
    } catch (const json::exception& e) {
      manifest_fail("block entry is missing a field: " + std::string(e.what()));
    }
    if (!block_ids.insert(mb.id).second) manifest_fail("duplicate block id " + mb.id);
    m.blocks.push_back(std::move(mb));
  }

  if (j.contains("config")) m.config = parse_config(j.at("config"));

  // Referenced files must exist.
  for (const auto& f : m.facades) {
    for (const std::string& p :
         [&] {
           std::vector<std::string> all{f.image_path, f.facade_mask_path};
           all.insert(all.end(), f.occlusion_mask_paths.begin(), f.occlusion_mask_paths.end());
           return all;
         }()) {
      if (!fs::exists(p)) manifest_fail("referenced file does not exist: " + p);
    }
    if (!block_ids.count(f.block_id))
      manifest_fail("facade " + f.id + " references unknown block " + f.block_id);
    if (!ids.count(f.neighbor_id))
      manifest_fail("facade " + f.id + " references unknown neighbor " + f.neighbor_id);
  }

  // Neighbor links per block must form one cycle covering the block's facades.
  for (const auto& b : m.blocks) {
    std::vector<const ManifestFacade*> members;
    for (const auto& f : m.facades)
      if (f.block_id == b.id) members.push_back(&f);
    if (members.empty()) continue;
    std::map<std::string, const ManifestFacade*> by_id;
    for (auto* f : members) by_id[f->id] = f;
    const ManifestFacade* cur = members.front();
    std::set<std::string> visited;
    while (visited.insert(cur->id).second) {
      auto nit = by_id.find(cur->neighbor_id);
      if (nit == by_id.end())
        manifest_fail("facade " + cur->id + " links outside its block " + b.id);
      cur = nit->second;
    }
    if (cur->id != members.front()->id || visited.size() != members.size())
      manifest_fail("block " + b.id + " facades do not form a single cycle");
  }
  return m;
}

PipelineConfig pipeline_config_from_json_text(const std::string& text) {
  if (text.empty()) return {};
  try {
    return parse_config(json::parse(text));
  } catch (const json::exception& e) {
    manifest_fail(std::string("config is not valid JSON: ") + e.what());
  }
}

SceneManifest SceneManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) manifest_fail("cannot open manifest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), fs::path(path).parent_path().string());
}

}  // namespace f3d

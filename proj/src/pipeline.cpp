#include "pipeline.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "image_io.hpp"

namespace f3d {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct FacadeResult {
  FacadeReport report;
  std::optional<RectifiedFacade> rectified;
  // Per-facade VP instrumentation, merged into the run-level report.
  struct VpCounts {
    std::uint64_t baseline = 0, collinear = 0, infinite = 0, combined = 0;
    double baseline_ms = 0, collinear_ms = 0, infinite_ms = 0, combined_ms = 0;
  };
  std::optional<VpCounts> vp_counts;
};

InpaintBackend make_backend(const PipelineConfig& cfg, const RunFlags& flags,
                            std::uint64_t facade_salt) {
  if (flags.backend == InpaintBackendKind::Patch) {
    PatchOptions opt = cfg.patch;
    opt.seed = mix_seed(flags.seed, facade_salt);
    return [opt](const InpaintRequest& req) { return inpaint_patch(req, opt); };
  }
  DiffusionOptions opt = cfg.diffusion;
  return [opt](const InpaintRequest& req) { return inpaint_diffusion(req, opt); };
}

// Score all candidates against the voting segments; used for instrumentation.
double time_candidate_scoring(const std::vector<VanishingPoint>& candidates,
                              const std::vector<LineSegment>& segments, const BinMask& mask,
                              const VoteConfig& cfg) {
  Clock::time_point t0 = Clock::now();
  for (const auto& c : candidates) {
    try {
      (void)vote(c, segments, mask, cfg);
    } catch (const Error&) {
      break;  // NoEvidence applies to every candidate alike
    }
  }
  return ms_since(t0);
}

FacadeResult process_facade(const ManifestFacade& mf, const PipelineConfig& cfg,
                            const RunFlags& flags, std::uint64_t facade_index,
                            const std::string& out_dir) {
  FacadeResult result;
  result.report.id = mf.id;

  auto debug_path = [&](const std::string& suffix) {
    return (fs::path(out_dir) / "debug" / (mf.id + "_" + suffix)).string();
  };

  try {
    Clock::time_point t0 = Clock::now();
    GrayImage image = load_image(mf.image_path);
    ProbMask facade_prob = load_prob_mask(mf.facade_mask_path);
    if (facade_prob.width != image.width || facade_prob.height != image.height)
      fail(Err::DimMismatch, "facade mask dimensions do not match image: " + mf.facade_mask_path);
    result.report.timings_ms["load_ms"] = ms_since(t0);

    // Matting: facade, then each occlusion mask.
    t0 = Clock::now();
    Trimap facade_trimap = make_trimap(facade_prob, cfg.matting);
    AlphaMatte facade_matte = solve_matte(image, facade_trimap, cfg.matting);
    BinMask facade_bin = binarize_matte(facade_matte, cfg.matting);

    std::vector<AlphaMatte> occlusion_mattes;
    for (const auto& path : mf.occlusion_mask_paths) {
      ProbMask occ = load_prob_mask(path);
      if (occ.width != image.width || occ.height != image.height)
        fail(Err::DimMismatch, "occlusion mask dimensions do not match image: " + path);
      try {
        Trimap tm = make_trimap(occ, cfg.matting);
        occlusion_mattes.push_back(solve_matte(image, tm, cfg.matting));
      } catch (const Error& e) {
        if (e.code() != Err::DegenerateTrimap) throw;
        result.report.warnings.push_back("occlusion mask " + path + " is empty, skipped");
      }
    }
    result.report.timings_ms["matting_ms"] = ms_since(t0);

    // Line detection restricted to the facade matte.
    t0 = Clock::now();
    BinMask edges = detect_edges(image, cfg.canny);
    for (size_t i = 0; i < edges.data.size(); ++i) edges.data[i] &= facade_bin.data[i];

    auto segments_for = [&](const LinearityConfig& lin) {
      std::vector<LineSegment> segs;
      auto contours = trace_contours(edges);
      for (size_t ci = 0; ci < contours.size(); ++ci) {
        if (static_cast<int>(contours[ci].size()) < 2 * lin.k_s) continue;
        auto labels = label_linearity(contours[ci], lin);
        RansacConfig rc = cfg.ransac;
        rc.seed = mix_seed(mix_seed(flags.seed, facade_index), ci);
        auto fit = fit_segments(contours[ci], labels, rc, lin.k_s);
        segs.insert(segs.end(), fit.begin(), fit.end());
      }
      return segs;
    };
    std::vector<LineSegment> strict_segments = segments_for(cfg.linearity_accumulation);
    std::vector<LineSegment> voting_segments = segments_for(cfg.linearity_voting);
    result.report.segment_count = static_cast<int>(voting_segments.size());
    result.report.timings_ms["lines_ms"] = ms_since(t0);

    if (flags.debug) {
      fs::create_directories(fs::path(out_dir) / "debug");
      save_gray_png(matte_to_gray(facade_matte), debug_path("matte.png"));
      GrayImage tri(image.width, image.height);
      for (size_t i = 0; i < tri.size(); ++i)
        tri.data[i] = static_cast<std::uint8_t>(facade_trimap.data[i]);
      save_gray_png(tri, debug_path("trimap.png"));
      GrayImage edge_img(image.width, image.height);
      for (size_t i = 0; i < edges.data.size(); ++i) edge_img.data[i] = edges.data[i] ? 255 : 0;
      save_gray_png(edge_img, debug_path("edges.png"));
      std::ofstream sj(debug_path("segments.json"));
      sj << segments_to_json(voting_segments);
      save_gray_png(render_segment_overlay(image, voting_segments), debug_path("overlay.png"));
    }

    // Vanishing points: strict lines accumulate candidates, relaxed lines vote.
    t0 = Clock::now();
    VoteConfig vote_cfg = cfg.vote;
    vote_cfg.image_width = image.width;
    vote_cfg.image_height = image.height;

    VoteConfig no_dedup = vote_cfg;
    no_dedup.dedup_finite = false;
    no_dedup.dedup_infinite = false;

    auto accumulate_with_fallback = [&](const std::vector<LineSegment>& base,
                                        const VoteConfig& vc, bool merge_collinear) {
      std::vector<LineSegment> acc = base;
      if (merge_collinear) acc = dedup_collinear(acc, vc);
      std::vector<VanishingPoint> cands;
      if (acc.size() >= 2) cands = accumulate_candidates(acc, vc);
      if (cands.size() < 2) {
        // Accumulation starved: relax to the voting-grade lines.
        std::vector<LineSegment> relaxed = voting_segments;
        if (merge_collinear) relaxed = dedup_collinear(relaxed, vc);
        if (relaxed.size() >= 2) cands = accumulate_candidates(relaxed, vc);
      }
      return cands;
    };

    std::vector<VanishingPoint> candidates =
        accumulate_with_fallback(strict_segments, flags.dedup ? vote_cfg : no_dedup, flags.dedup);
    result.report.candidate_count = static_cast<int>(candidates.size());

    if (flags.metrics) {
      FacadeResult::VpCounts counts;
      VoteConfig collinear_only = no_dedup;
      VoteConfig infinite_only = no_dedup;
      infinite_only.dedup_infinite = true;

      Clock::time_point tb = Clock::now();
      auto baseline = accumulate_with_fallback(strict_segments, no_dedup, false);
      counts.baseline_ms = ms_since(tb) +
          time_candidate_scoring(baseline, voting_segments, facade_bin, vote_cfg);
      counts.baseline = baseline.size();

      tb = Clock::now();
      auto coll = accumulate_with_fallback(strict_segments, collinear_only, true);
      counts.collinear_ms = ms_since(tb) +
          time_candidate_scoring(coll, voting_segments, facade_bin, vote_cfg);
      counts.collinear = coll.size();

      tb = Clock::now();
      auto inf = accumulate_with_fallback(strict_segments, infinite_only, false);
      counts.infinite_ms = ms_since(tb) +
          time_candidate_scoring(inf, voting_segments, facade_bin, vote_cfg);
      counts.infinite = inf.size();

      tb = Clock::now();
      auto comb = accumulate_with_fallback(strict_segments, vote_cfg, true);
      counts.combined_ms = ms_since(tb) +
          time_candidate_scoring(comb, voting_segments, facade_bin, vote_cfg);
      counts.combined = comb.size();
      result.vp_counts = counts;
    }

    auto [vp_first, vp_second] = select_vp_pair(candidates, voting_segments, facade_bin, vote_cfg);
    result.report.timings_ms["vanish_ms"] = ms_since(t0);

    // Rectification. The more horizontal pencil plays vp1 so facades stay
    // upright in the rectified frame.
    t0 = Clock::now();
    Point2 centroid = mask_centroid(facade_bin);
    double d1 = angle_between_deg(direction_from(vp_first.vp, centroid), 0.0);
    double d2 = angle_between_deg(direction_from(vp_second.vp, centroid), 0.0);
    VanishingPoint vp_h = d1 <= d2 ? vp_first.vp : vp_second.vp;
    VanishingPoint vp_v = d1 <= d2 ? vp_second.vp : vp_first.vp;

    FacadeQuad quad = bounding_quadrangle(facade_bin, vp_h, vp_v);
    Point2 principal{image.width / 2.0, image.height / 2.0};
    FocalEstimate focal = estimate_focal(vp_h, vp_v, principal, image.width, image.height);
    CameraGuess cam{principal, focal.focal};
    double aspect = aspect_ratio(quad, cam);

    int out_h = cfg.out_height > 0 ? cfg.out_height : default_out_height(quad, aspect);
    int out_w = std::max(1, static_cast<int>(std::lround(aspect * out_h)));
    Homography h = homography_from_quad(quad, aspect, out_h);
    RectifiedFacade rf = warp(image, facade_matte, h, out_w, out_h);
    rf.aspect = aspect;
    rf.focal = focal;

    // Occlusion masks ride the same homography, then the tiler fills them.
    BinMask occlusion_rect(out_w, out_h);
    for (const auto& om : occlusion_mattes) {
      AlphaMatte warped = warp_plane(om, h, out_w, out_h);
      for (size_t i = 0; i < occlusion_rect.data.size(); ++i)
        if (warped.alpha[i] > cfg.matting.binarize_threshold) occlusion_rect.data[i] = 1;
    }
    result.report.timings_ms["rectify_ms"] = ms_since(t0);

    t0 = Clock::now();
    if (occlusion_rect.count() > 0 && occlusion_rect.count() < occlusion_rect.data.size()) {
      if (flags.debug) {
        GrayImage occ_img(out_w, out_h);
        for (size_t i = 0; i < occlusion_rect.data.size(); ++i)
          occ_img.data[i] = occlusion_rect.data[i] ? 255 : 0;
        save_gray_png(occ_img, debug_path("rect_occlusion.png"));
      }
      TiledStats stats;
      InpaintBackend backend = make_backend(cfg, flags, facade_index);
      InpaintOutcome filled =
          inpaint_tiled({rf.texture, occlusion_rect}, backend, cfg.tiler, &stats);
      for (auto& n : filled.notes) result.report.warnings.push_back(n);
      rf.texture = std::move(filled.image);

      // The facade matte has a hole where the occluder sat; diffuse it shut.
      GrayImage matte_gray = matte_to_gray(rf.matte);
      InpaintOutcome matte_fill = inpaint_tiled(
          {matte_gray, occlusion_rect},
          [&](const InpaintRequest& r) { return inpaint_diffusion(r, cfg.diffusion); },
          cfg.tiler);
      for (size_t i = 0; i < rf.matte.alpha.size(); ++i)
        if (occlusion_rect.data[i]) rf.matte.alpha[i] = matte_fill.image.data[i] / 255.f;

      result.report.inpaint.slice_count = stats.slice_count;
      result.report.inpaint.peak_slice_area = stats.peak_slice_area;
    }
    result.report.inpaint.wall_time_ms = ms_since(t0);
    result.report.timings_ms["inpaint_ms"] = result.report.inpaint.wall_time_ms;

    rf = scale_to_world(std::move(rf), mf.width_m);

    // Outputs: gray+alpha texture plus a sidecar with the recovered geometry.
    fs::create_directories(fs::path(out_dir) / "facades");
    std::vector<std::uint8_t> alpha(rf.matte.alpha.size());
    for (size_t i = 0; i < alpha.size(); ++i) alpha[i] = round_u8(rf.matte.alpha[i] * 255.0);
    save_gray_alpha_png(rf.texture, alpha,
                        (fs::path(out_dir) / "facades" / (mf.id + ".png")).string());
    nlohmann::json sidecar{{"aspect", rf.aspect},
                           {"world_width", rf.world_width},
                           {"world_height", rf.world_height},
                           {"focal", rf.focal.focal},
                           {"approximate_focal", rf.focal.approximate}};
    std::ofstream sc((fs::path(out_dir) / "facades" / (mf.id + ".json")).string());
    sc << sidecar.dump(2) << "\n";

    result.report.aspect = rf.aspect;
    result.report.focal = rf.focal.focal;
    result.report.approximate_focal = rf.focal.approximate;
    result.report.world_width = rf.world_width;
    result.report.world_height = rf.world_height;
    result.rectified = std::move(rf);
    result.report.ok = true;
  } catch (const Error& e) {
    result.report.ok = false;
    result.report.error = e.what();
  } catch (const std::exception& e) {
    result.report.ok = false;
    result.report.error = std::string("unexpected: ") + e.what();
  }
  return result;
}

}  // namespace

RunReport run_pipeline(const SceneManifest& manifest, const std::string& out_dir,
                       const RunFlags& flags) {
  fs::create_directories(out_dir);

  RunReport report;
  report.seed = flags.seed;

  // Facades are independent; a small pool keeps wall time down while the
  // manifest order keeps the report and outputs deterministic.
  size_t n = manifest.facades.size();
  unsigned workers = flags.workers > 0 ? static_cast<unsigned>(flags.workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

  std::vector<FacadeResult> results(n);
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
        results[i] = process_facade(manifest.facades[i], manifest.config, flags, i, out_dir);
    });
  for (auto& t : pool) t.join();

  std::map<std::string, FacadeRecord> records;
  std::map<std::string, const ManifestFacade*> manifest_by_id;
  for (size_t i = 0; i < n; ++i) {
    const auto& mf = manifest.facades[i];
    manifest_by_id[mf.id] = &mf;
    report.facades.push_back(results[i].report);
    if (!results[i].report.ok) {
      report.partial = true;
      continue;
    }
    FacadeRecord rec;
    rec.id = mf.id;
    rec.rf = std::move(*results[i].rectified);
    rec.length_m = rec.rf.world_width;
    rec.height_m = rec.rf.world_height;
    rec.neighbor = mf.neighbor_id;
    rec.same_building_as_neighbor = mf.same_building;
    rec.cardinal = mf.cardinal;
    records.emplace(rec.id, std::move(rec));
  }

  if (flags.metrics) {
    ReductionReport rr;
    for (const auto& r : results) {
      if (!r.vp_counts) continue;
      rr.collinear.before_count += r.vp_counts->baseline;
      rr.collinear.after_count += r.vp_counts->collinear;
      rr.collinear.before_ms += r.vp_counts->baseline_ms;
      rr.collinear.after_ms += r.vp_counts->collinear_ms;
      rr.infinite.before_count += r.vp_counts->baseline;
      rr.infinite.after_count += r.vp_counts->infinite;
      rr.infinite.before_ms += r.vp_counts->baseline_ms;
      rr.infinite.after_ms += r.vp_counts->infinite_ms;
      rr.combined.before_count += r.vp_counts->baseline;
      rr.combined.after_count += r.vp_counts->combined;
      rr.combined.before_ms += r.vp_counts->baseline_ms;
      rr.combined.after_ms += r.vp_counts->combined_ms;
    }
    report.vp_reduction = rr;
  }

  // Blocks assemble only from fully-successful facade chains.
  std::vector<BlockLayout> layouts;
  for (const auto& block : manifest.blocks) {
    BlockReport br;
    br.id = block.id;
    std::vector<const ManifestFacade*> members;
    for (const auto& f : manifest.facades)
      if (f.block_id == block.id) members.push_back(&f);
    if (members.empty()) {
      br.ok = true;
      report.blocks.push_back(br);
      continue;
    }
    bool all_ok = true;
    for (auto* f : members)
      if (!records.count(f->id)) all_ok = false;
    if (!all_ok) {
      report.warnings.push_back("block " + block.id + " skipped: missing facades");
      report.blocks.push_back(br);
      continue;
    }
    try {
      std::map<std::string, FacadeRecord> block_records;
      for (auto* f : members) block_records.emplace(f->id, records.at(f->id));
      BlockWalkResult walk;
      if (members.size() == 1) {
        // The block-walk loop body never runs for a self-linked facade, but a
        // one-facade block still models its one building (depth defaults to
        // the facade's own length).
        const FacadeRecord& rec = block_records.begin()->second;
        Cuboid c;
        c.width = rec.length_m;
        c.depth = rec.length_m;
        c.height = rec.height_m;
        if (!(c.width > 0) || !(c.height > 0))
          fail(Err::NonPositiveDim, "facade " + rec.id + " has non-positive dimensions");
        c.textures[static_cast<Face>(rec.cardinal)] = rec.id;
        c.tiling_facade = rec.id;
        walk.cuboids.push_back(std::move(c));
      } else {
        walk = map_facades_within_block(members.front()->id, block_records);
      }
      br.ok = true;
      br.closure_gap_m = walk.closure_gap_m;
      br.adjusted = walk.adjusted;
      br.cuboid_count = static_cast<int>(walk.cuboids.size());
      br.cardinal_turns = walk.cardinal_turns;
      layouts.push_back({block.id, block.offset_x, block.offset_y, std::move(walk)});
    } catch (const Error& e) {
      report.warnings.push_back("block " + block.id + " failed: " + e.what());
      report.partial = true;
    }
    report.blocks.push_back(br);
  }

  Scene scene = assemble_city(layouts);
  for (auto& w : scene.warnings) report.warnings.push_back(w);
  std::string model_dir = (fs::path(out_dir) / "model").string();
  export_gltf(scene, records, model_dir);
  report.gltf_path = (fs::path("model") / "scene.gltf").string();

  std::ofstream rf(fs::path(out_dir) / "report.json");
  rf << report.to_json() << "\n";
  return report;
}

RunReport run_pipeline(const std::string& manifest_path, const std::string& out_dir,
                       const RunFlags& flags) {
  return run_pipeline(SceneManifest::load(manifest_path), out_dir, flags);
}

std::string RunReport::to_json(int indent) const {
  nlohmann::json j;
  j["seed"] = seed;
  j["status"] = partial ? "partial" : "ok";
  j["gltf"] = gltf_path;
  j["warnings"] = warnings;

  nlohmann::json facades_json = nlohmann::json::array();
  for (const auto& f : facades) {
    nlohmann::json fj{{"id", f.id},
                      {"ok", f.ok},
                      {"segment_count", f.segment_count},
                      {"candidate_count", f.candidate_count},
                      {"warnings", f.warnings}};
    if (!f.ok) fj["error"] = f.error;
    if (f.ok) {
      fj["aspect"] = f.aspect;
      fj["focal"] = f.focal;
      fj["approximate_focal"] = f.approximate_focal;
      fj["world_width"] = f.world_width;
      fj["world_height"] = f.world_height;
      fj["inpaint"] = {{"slice_count", f.inpaint.slice_count},
                       {"peak_slice_area", f.inpaint.peak_slice_area},
                       {"wall_time_ms", f.inpaint.wall_time_ms}};
    }
    nlohmann::json tj;
    for (const auto& [k, v] : f.timings_ms) tj[k] = v;
    fj["timings_ms"] = tj;
    facades_json.push_back(fj);
  }
  j["facades"] = facades_json;

  nlohmann::json blocks_json = nlohmann::json::array();
  for (const auto& b : blocks)
    blocks_json.push_back(nlohmann::json{{"id", b.id},
                                         {"ok", b.ok},
                                         {"closure_gap_m", b.closure_gap_m},
                                         {"adjusted", b.adjusted},
                                         {"cuboid_count", b.cuboid_count},
                                         {"cardinal_turns", b.cardinal_turns}});
  j["blocks"] = blocks_json;

  if (vp_reduction) j["vp_reduction"] = nlohmann::json::parse(vp_reduction->to_json());
  return j.dump(indent);
}

}  // namespace f3d

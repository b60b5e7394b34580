#include "facade3d.h"

#include <chrono>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "image_io.hpp"
#include "pipeline.hpp"

using namespace f3d;

struct f3d_image {
  GrayImage gray;
  std::vector<std::uint8_t> alpha;  // empty = none
};

namespace {

thread_local std::string g_last_error;

f3d_status status_of(const Error& e) {
  switch (e.code()) {
    case Err::UnreadableFile: return F3D_UNREADABLE;
    case Err::UnsupportedFormat: return F3D_UNSUPPORTED;
    case Err::ManifestError: return F3D_FATAL;
    case Err::WriteFailure: return F3D_WRITE_FAILURE;
    case Err::DegenerateTrimap:
    case Err::DegenerateQuad:
    case Err::NonPositiveDim:
    case Err::OpenChain:
    case Err::DimMismatch: return F3D_DEGENERATE;
    case Err::InsufficientSegments:
    case Err::NoEvidence:
    case Err::NoOrthogonalPair:
    case Err::NoSourcePatch: return F3D_NO_EVIDENCE;
    case Err::SolverDiverged:
    case Err::NumericallyUnstable:
    case Err::SingularSystem:
    case Err::OutOfWindow:
    case Err::ContourTooShort: return F3D_NUMERIC;
    default: return F3D_INVALID_ARGUMENT;
  }
}

template <typename Fn>
f3d_status guarded(Fn&& fn) {
  try {
    fn();
    return F3D_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return F3D_FATAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

PipelineConfig config_from_json(const char* config_json) {
  if (!config_json || !*config_json) return {};
  return pipeline_config_from_json_text(config_json);
}

ProbMask prob_from_image(const f3d_image* img) {
  ProbMask p(img->gray.width, img->gray.height);
  for (size_t i = 0; i < img->gray.size(); ++i) p.data[i] = img->gray.data[i] / 255.0f;
  return p;
}

AlphaMatte matte_from_image(const f3d_image* img) {
  AlphaMatte m(img->gray.width, img->gray.height);
  const std::uint8_t* plane = img->alpha.empty() ? img->gray.data.data() : img->alpha.data();
  for (size_t i = 0; i < m.alpha.size(); ++i) m.alpha[i] = plane[i] / 255.0f;
  return m;
}

}  // namespace

extern "C" {

const char* f3d_version(void) { return "1.0.0"; }

const char* f3d_last_error(void) { return g_last_error.c_str(); }

f3d_status f3d_image_load(const char* path, f3d_image** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = new f3d_image{load_image(path), {}}; });
}

f3d_status f3d_image_create(int32_t width, int32_t height, const uint8_t* gray, f3d_image** out) {
  if (!out) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto img = std::make_unique<f3d_image>();
    img->gray = GrayImage(width, height);
    if (gray) std::memcpy(img->gray.data.data(), gray, img->gray.size());
    *out = img.release();
  });
}

int32_t f3d_image_width(const f3d_image* img) { return img ? img->gray.width : 0; }
int32_t f3d_image_height(const f3d_image* img) { return img ? img->gray.height : 0; }
const uint8_t* f3d_image_pixels(const f3d_image* img) {
  return img ? img->gray.data.data() : nullptr;
}
uint8_t* f3d_image_pixels_mut(f3d_image* img) { return img ? img->gray.data.data() : nullptr; }
const uint8_t* f3d_image_alpha(const f3d_image* img) {
  return img && !img->alpha.empty() ? img->alpha.data() : nullptr;
}

f3d_status f3d_image_set_alpha(f3d_image* img, const uint8_t* alpha) {
  if (!img || !alpha) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  img->alpha.assign(alpha, alpha + img->gray.size());
  return F3D_OK;
}

f3d_status f3d_image_save_png(const f3d_image* img, const char* path) {
  if (!img || !path) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  return guarded([&] {
    if (img->alpha.empty()) save_gray_png(img->gray, path);
    else save_gray_alpha_png(img->gray, img->alpha, path);
  });
}

void f3d_image_free(f3d_image* img) { delete img; }

f3d_status f3d_matte_refine(const f3d_image* image, const f3d_image* prob_mask,
                            const char* config_json, f3d_image** matte_out) {
  if (!image || !prob_mask || !matte_out) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  return guarded([&] {
    MattingConfig cfg = config_from_json(config_json).matting;
    Trimap tm = make_trimap(prob_from_image(prob_mask), cfg);
    AlphaMatte matte = solve_matte(image->gray, tm, cfg);
    *matte_out = new f3d_image{matte_to_gray(matte), {}};
  });
}

f3d_status f3d_detect_segments(const f3d_image* image, const f3d_image* mask, uint64_t seed,
                               const char* config_json, char** segments_json_out) {
  if (!image || !segments_json_out) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  return guarded([&] {
    PipelineConfig cfg = config_from_json(config_json);
    RansacConfig rc = cfg.ransac;
    rc.seed = seed;
    BinMask bin;
    if (mask) {
      bin = BinMask(mask->gray.width, mask->gray.height);
      for (size_t i = 0; i < bin.data.size(); ++i) bin.data[i] = mask->gray.data[i] > 127 ? 1 : 0;
    }
    auto segs = detect_segments(image->gray, mask ? &bin : nullptr, cfg.canny,
                                cfg.linearity_voting, rc);
    *segments_json_out = dup_string(segments_to_json(segs));
  });
}

f3d_status f3d_rectify_facade(const f3d_image* image, const f3d_image* matte_image,
                              double width_m, const char* config_json, f3d_image** rectified_out,
                              char** info_json_out) {
  if (!image || !matte_image || !rectified_out) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  return guarded([&] {
    PipelineConfig cfg = config_from_json(config_json);
    AlphaMatte matte = matte_from_image(matte_image);
    MattingConfig mc = cfg.matting;
    BinMask bin = binarize_matte(matte, mc);

    VoteConfig vc = cfg.vote;
    vc.image_width = image->gray.width;
    vc.image_height = image->gray.height;

    BinMask edges = detect_edges(image->gray, cfg.canny);
    for (size_t i = 0; i < edges.data.size(); ++i) edges.data[i] &= bin.data[i];
    auto fit_with = [&](const LinearityConfig& lin) {
      std::vector<LineSegment> segs;
      auto contours = trace_contours(edges);
      for (size_t ci = 0; ci < contours.size(); ++ci) {
        if (static_cast<int>(contours[ci].size()) < 2 * lin.k_s) continue;
        auto labels = label_linearity(contours[ci], lin);
        RansacConfig rc = cfg.ransac;
        rc.seed = mix_seed(0, ci);
        auto f = fit_segments(contours[ci], labels, rc, lin.k_s);
        segs.insert(segs.end(), f.begin(), f.end());
      }
      return segs;
    };
    auto strict = fit_with(cfg.linearity_accumulation);
    auto voting = fit_with(cfg.linearity_voting);

    auto merged = dedup_collinear(strict, vc);
    std::vector<VanishingPoint> cands;
    if (merged.size() >= 2) cands = accumulate_candidates(merged, vc);
    if (cands.size() < 2) {
      auto relaxed = dedup_collinear(voting, vc);
      if (relaxed.size() >= 2) cands = accumulate_candidates(relaxed, vc);
    }
    auto [first, second] = select_vp_pair(cands, voting, bin, vc);

    Point2 centroid = mask_centroid(bin);
    double d1 = angle_between_deg(direction_from(first.vp, centroid), 0.0);
    double d2 = angle_between_deg(direction_from(second.vp, centroid), 0.0);
    VanishingPoint vp_h = d1 <= d2 ? first.vp : second.vp;
    VanishingPoint vp_v = d1 <= d2 ? second.vp : first.vp;

    FacadeQuad quad = bounding_quadrangle(bin, vp_h, vp_v);
    Point2 principal{image->gray.width / 2.0, image->gray.height / 2.0};
    FocalEstimate focal =
        estimate_focal(vp_h, vp_v, principal, image->gray.width, image->gray.height);
    double aspect = aspect_ratio(quad, {principal, focal.focal});
    int out_h = cfg.out_height > 0 ? cfg.out_height : default_out_height(quad, aspect);
    int out_w = std::max(1, static_cast<int>(std::lround(aspect * out_h)));
    Homography h = homography_from_quad(quad, aspect, out_h);
    RectifiedFacade rf = warp(image->gray, matte, h, out_w, out_h);
    rf.aspect = aspect;
    rf.focal = focal;
    if (width_m > 0) rf = scale_to_world(std::move(rf), width_m);

    auto result = std::make_unique<f3d_image>();
    result->gray = rf.texture;
    result->alpha.resize(rf.matte.alpha.size());
    for (size_t i = 0; i < result->alpha.size(); ++i)
      result->alpha[i] = round_u8(rf.matte.alpha[i] * 255.0);
    *rectified_out = result.release();

    if (info_json_out) {
      nlohmann::json info{{"aspect", rf.aspect},
                          {"world_width", rf.world_width},
                          {"world_height", rf.world_height},
                          {"focal", rf.focal.focal},
                          {"approximate_focal", rf.focal.approximate}};
      *info_json_out = dup_string(info.dump());
    }
  });
}

f3d_status f3d_inpaint(const f3d_image* image, const f3d_image* mask, const char* backend,
                       uint64_t seed, const char* config_json, f3d_image** out,
                       char** metrics_json_out) {
  if (!image || !mask || !out) {
    g_last_error = "null argument";
    return F3D_INVALID_ARGUMENT;
  }
  return guarded([&] {
    PipelineConfig cfg = config_from_json(config_json);
    InpaintRequest req;
    req.image = image->gray;
    req.mask = BinMask(mask->gray.width, mask->gray.height);
    for (size_t i = 0; i < req.mask.data.size(); ++i)
      req.mask.data[i] = mask->gray.data[i] > 127 ? 1 : 0;

    InpaintBackend fn;
    std::string kind = backend ? backend : "diffusion";
    if (kind == "patch") {
      PatchOptions opt = cfg.patch;
      opt.seed = seed;
      fn = [opt](const InpaintRequest& r) { return inpaint_patch(r, opt); };
    } else if (kind == "diffusion") {
      DiffusionOptions opt = cfg.diffusion;
      fn = [opt](const InpaintRequest& r) { return inpaint_diffusion(r, opt); };
    } else {
      fail(Err::InvalidArgument, "unknown backend: " + kind);
    }

    auto t0 = std::chrono::steady_clock::now();
    TiledStats stats;
    InpaintOutcome res = inpaint_tiled(req, fn, cfg.tiler, &stats);
    double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (metrics_json_out) {
      InpaintMetrics m;
      masked_losses(image->gray, res.image, req.mask, &m.l1_mean, &m.l2_mean);
      m.wall_time_ms = wall;
      m.slice_count = stats.slice_count;
      m.peak_slice_area = stats.peak_slice_area;
      *metrics_json_out = dup_string(m.to_json());
    }
    *out = new f3d_image{std::move(res.image), {}};
  });
}

f3d_status f3d_run_pipeline(const f3d_run_options* options, char** report_json_out) {
  if (!options || !options->manifest_path || !options->out_dir) {
    g_last_error = "null options";
    return F3D_INVALID_ARGUMENT;
  }
  bool partial = false;
  f3d_status st = guarded([&] {
    RunFlags flags;
    flags.debug = options->debug != 0;
    flags.seed = options->seed;
    flags.dedup = options->no_dedup == 0;
    flags.metrics = options->metrics != 0;
    flags.workers = options->workers;
    std::string backend = options->backend ? options->backend : "diffusion";
    if (backend == "patch") flags.backend = InpaintBackendKind::Patch;
    else if (backend == "diffusion") flags.backend = InpaintBackendKind::Diffusion;
    else fail(Err::InvalidArgument, "unknown backend: " + backend);

    RunReport report = run_pipeline(options->manifest_path, options->out_dir, flags);
    partial = report.partial;
    if (report_json_out) *report_json_out = dup_string(report.to_json());
  });
  if (st != F3D_OK) return st;
  return partial ? F3D_PARTIAL : F3D_OK;
}

void f3d_string_free(char* s) { delete[] s; }

}  // extern "C"

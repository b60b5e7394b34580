#include "inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include <json.hpp>

namespace f3d {

namespace {

void check_request(const InpaintRequest& req) {
  if (req.mask.width != req.image.width || req.mask.height != req.image.height)
    fail(Err::DimMismatch, "mask dimensions do not match image");
  if (req.mask.count() == req.image.size())
    fail(Err::InvalidArgument, "mask covers the whole image");
}

// 4-connected components of the mask used by the diffusion solver; the tiler
// uses 8-connectivity separately.
std::vector<std::vector<int>> mask_components(const BinMask& mask, bool eight_connected) {
  const int w = mask.width, h = mask.height;
  std::vector<int> label(static_cast<size_t>(w) * h, -1);
  std::vector<std::vector<int>> comps;
  std::deque<int> queue;
  const int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  const int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const int dx4[] = {0, -1, 1, 0};
  const int dy4[] = {-1, 0, 0, 1};
  const int* dx = eight_connected ? dx8 : dx4;
  const int* dy = eight_connected ? dy8 : dy4;
  const int nn = eight_connected ? 8 : 4;

  for (int start = 0; start < w * h; ++start) {
    if (!mask.data[start] || label[start] >= 0) continue;
    int id = static_cast<int>(comps.size());
    comps.emplace_back();
    label[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      comps[id].push_back(cur);
      int cx = cur % w, cy = cur / w;
      for (int k = 0; k < nn; ++k) {
        int nx = cx + dx[k], ny = cy + dy[k];
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        int ni = ny * w + nx;
        if (mask.data[ni] && label[ni] < 0) {
          label[ni] = id;
          queue.push_back(ni);
        }
      }
    }
    std::sort(comps[id].begin(), comps[id].end());
  }
  return comps;
}

}  // namespace

InpaintOutcome inpaint_diffusion(const InpaintRequest& req, const DiffusionOptions& opt) {
  check_request(req);
  const int w = req.image.width, h = req.image.height;

  InpaintOutcome out;
  out.image = req.image;
  auto comps = mask_components(req.mask, /*eight_connected=*/false);
  if (comps.empty()) return out;

  double global_sum = 0;
  size_t global_n = 0;
  for (int i = 0; i < w * h; ++i)
    if (!req.mask.data[i]) {
      global_sum += req.image.data[i];
      ++global_n;
    }
  const double global_mean = global_n ? global_sum / global_n : 128.0;

  std::vector<double> value(static_cast<size_t>(w) * h);
  for (int i = 0; i < w * h; ++i) value[i] = req.image.data[i];

  const int dx[] = {0, -1, 1, 0};
  const int dy[] = {-1, 0, 0, 1};

  for (size_t ci = 0; ci < comps.size(); ++ci) {
    const auto& comp = comps[ci];

    // Dirichlet data comes from unmasked 4-neighbors of the component.
    double boundary_sum = 0;
    size_t boundary_n = 0;
    for (int idx : comp) {
      int cx = idx % w, cy = idx / w;
      for (int k = 0; k < 4; ++k) {
        int nx = cx + dx[k], ny = cy + dy[k];
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        if (!req.mask.at(nx, ny)) {
          boundary_sum += value[ny * w + nx];
          ++boundary_n;
        }
      }
    }
    if (boundary_n == 0) {
      for (int idx : comp) value[idx] = global_mean;
      out.notes.push_back("isolated region " + std::to_string(ci) +
                          " filled with global mean");
      continue;
    }
    const double init = boundary_sum / boundary_n;
    for (int idx : comp) value[idx] = init;

    // Gauss-Seidel with over-relaxation; image borders act as mirrors.
    bool converged = false;
    for (int it = 0; it < opt.max_iterations && !converged; ++it) {
      double max_delta = 0;
      for (int idx : comp) {
        int cx = idx % w, cy = idx / w;
        double sum = 0;
        int n = 0;
        for (int k = 0; k < 4; ++k) {
          int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          sum += value[ny * w + nx];
          ++n;
        }
        double target = sum / n;
        double next = value[idx] + opt.sor_omega * (target - value[idx]);
        max_delta = std::max(max_delta, std::fabs(next - value[idx]));
        value[idx] = next;
      }
      converged = max_delta < opt.tolerance;
    }
    for (int idx : comp) out.image.data[idx] = round_u8(value[idx]);
  }
  return out;
}

namespace {

std::uint32_t bounded_draw(std::mt19937_64& rng, std::uint32_t n) {
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::uint32_t>(v % n);
}

}  // namespace

InpaintOutcome inpaint_patch(const InpaintRequest& req, const PatchOptions& opt) {
  check_request(req);
  const int w = req.image.width, h = req.image.height;

  InpaintOutcome out;
  out.image = req.image;
  if (req.mask.count() == 0) return out;

  std::vector<std::uint8_t> known(req.mask.data.size());
  for (size_t i = 0; i < known.size(); ++i) known[i] = req.mask.data[i] ? 0 : 1;

  auto odd_clamp = [](int v, int lo, int hi) {
    v = std::clamp(v, lo, hi);
    return v % 2 == 0 ? v - 1 : v;
  };
  const int max_fit = std::min(w, h);
  const int patch_hi = odd_clamp(opt.max_patch, 3, max_fit);
  const int patch_lo = std::min(odd_clamp(opt.min_patch, 3, max_fit), patch_hi);

  std::mt19937_64 rng(opt.seed);
  const int dx[] = {0, -1, 1, 0};
  const int dy[] = {-1, 0, 0, 1};

  size_t remaining = req.mask.count();
  while (remaining > 0) {
    // Fill front: unknown pixels with a known 4-neighbor; pick the target
    // whose max-size patch window has the most known pixels.
    int best_target = -1;
    int best_known = -1;
    const int half_hi = patch_hi / 2;
    for (int i = 0; i < w * h; ++i) {
      if (known[i]) continue;
      int cx = i % w, cy = i / w;
      bool front = false;
      for (int k = 0; k < 4 && !front; ++k) {
        int nx = cx + dx[k], ny = cy + dy[k];
        front = nx >= 0 && nx < w && ny >= 0 && ny < h && known[ny * w + nx];
      }
      if (!front) continue;
      int cnt = 0;
      for (int yy = std::max(0, cy - half_hi); yy <= std::min(h - 1, cy + half_hi); ++yy)
        for (int xx = std::max(0, cx - half_hi); xx <= std::min(w - 1, cx + half_hi); ++xx)
          cnt += known[yy * w + xx];
      if (cnt > best_known) {
        best_known = cnt;
        best_target = i;
      }
    }
    if (best_target < 0) fail(Err::NoSourcePatch, "mask has no reachable fill front");

    const int tx = best_target % w, ty = best_target / w;

    // Shrink the patch from max toward min until a fully-known source exists.
    bool filled = false;
    for (int p = patch_hi; p >= patch_lo && !filled; p -= 2) {
      const int half = p / 2;
      // Clamp the target window to the image; source patches must fit whole.
      int tx0 = std::clamp(tx - half, 0, w - p);
      int ty0 = std::clamp(ty - half, 0, h - p);

      std::vector<int> candidates;
      int sx_lo = std::max(0, tx0 - opt.search_area), sx_hi = std::min(w - p, tx0 + opt.search_area);
      int sy_lo = std::max(0, ty0 - opt.search_area), sy_hi = std::min(h - p, ty0 + opt.search_area);
      for (int sy = sy_lo; sy <= sy_hi; ++sy)
        for (int sx = sx_lo; sx <= sx_hi; ++sx) {
          bool ok = true;
          for (int yy = 0; yy < p && ok; ++yy) {
            const std::uint8_t* row = &known[(sy + yy) * w + sx];
            for (int xx = 0; xx < p; ++xx)
              if (!row[xx]) {
                ok = false;
                break;
              }
          }
          if (ok) candidates.push_back(sy * w + sx);
        }
      if (candidates.empty()) continue;

      // Keep the search bounded; strided subsample with a seeded offset.
      const size_t cap = 4096;
      if (candidates.size() > cap) {
        size_t stride = (candidates.size() + cap - 1) / cap;
        size_t offset = bounded_draw(rng, static_cast<std::uint32_t>(stride));
        std::vector<int> kept;
        for (size_t k = offset; k < candidates.size(); k += stride) kept.push_back(candidates[k]);
        candidates.swap(kept);
      }

      double best_ssd = std::numeric_limits<double>::max();
      int best_src = -1;
      for (int cand : candidates) {
        int sx = cand % w, sy = cand / w;
        double ssd = 0;
        int n = 0;
        for (int yy = 0; yy < p; ++yy)
          for (int xx = 0; xx < p; ++xx) {
            int ti = (ty0 + yy) * w + (tx0 + xx);
            if (!known[ti]) continue;
            double d = static_cast<double>(out.image.data[ti]) -
                       out.image.data[(sy + yy) * w + (sx + xx)];
            ssd += d * d;
            ++n;
          }
        if (n == 0) continue;
        ssd /= n;
        if (ssd < best_ssd) {
          best_ssd = ssd;
          best_src = cand;
        }
      }
      if (best_src < 0) continue;

      int sx = best_src % w, sy = best_src / w;
      for (int yy = 0; yy < p; ++yy)
        for (int xx = 0; xx < p; ++xx) {
          int ti = (ty0 + yy) * w + (tx0 + xx);
          if (known[ti]) continue;
          out.image.data[ti] = out.image.data[(sy + yy) * w + (sx + xx)];
          known[ti] = 1;
          --remaining;
        }
      filled = true;
    }
    if (!filled)
      fail(Err::NoSourcePatch, "no fully-valid source patch within the search area");
  }
  return out;
}

std::vector<InpaintSlice> split_for_inpaint(const InpaintRequest& req, const TilerConfig& cfg) {
  check_request(req);
  if (cfg.max_chunk_width < 2 * cfg.context_radius + 1 ||
      cfg.max_chunk_height < 2 * cfg.context_radius + 1)
    fail(Err::InvalidArgument, "max_chunk must be at least 2*context_radius+1 per side");
  const int w = req.image.width, h = req.image.height;

  struct Box {
    int x0, y0, x1, y1;  // half-open
    bool overlaps(const Box& o) const {
      return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }
  };

  auto comps = mask_components(req.mask, /*eight_connected=*/true);
  std::vector<Box> boxes;
  for (const auto& comp : comps) {
    int minx = w, miny = h, maxx = -1, maxy = -1;
    for (int idx : comp) {
      int cx = idx % w, cy = idx / w;
      minx = std::min(minx, cx);
      maxx = std::max(maxx, cx);
      miny = std::min(miny, cy);
      maxy = std::max(maxy, cy);
    }
    boxes.push_back({std::max(0, minx - cfg.context_radius), std::max(0, miny - cfg.context_radius),
                     std::min(w, maxx + 1 + cfg.context_radius),
                     std::min(h, maxy + 1 + cfg.context_radius)});
  }

  // Merge overlapping dilated boxes to a fixpoint.
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t i = 0; i < boxes.size() && !merged; ++i)
      for (size_t j = i + 1; j < boxes.size() && !merged; ++j)
        if (boxes[i].overlaps(boxes[j])) {
          boxes[i] = {std::min(boxes[i].x0, boxes[j].x0), std::min(boxes[i].y0, boxes[j].y0),
                      std::max(boxes[i].x1, boxes[j].x1), std::max(boxes[i].y1, boxes[j].y1)};
          boxes.erase(boxes.begin() + j);
          merged = true;
        }
  }

  // Oversized boxes split on a grid with context_radius overlap.
  std::vector<Box> cells;
  for (const auto& b : boxes) {
    int bw = b.x1 - b.x0, bh = b.y1 - b.y0;
    int step_x = std::max(1, cfg.max_chunk_width - cfg.context_radius);
    int step_y = std::max(1, cfg.max_chunk_height - cfg.context_radius);
    for (int cy = b.y0; cy < b.y1; cy += step_y) {
      int cy1 = std::min(b.y1, cy + cfg.max_chunk_height);
      for (int cx = b.x0; cx < b.x1; cx += step_x) {
        int cx1 = std::min(b.x1, cx + cfg.max_chunk_width);
        cells.push_back({cx, cy, cx1, cy1});
        if (cx1 >= b.x1) break;
      }
      if (cy1 >= b.y1) break;
    }
    (void)bw;
    (void)bh;
  }

  std::vector<InpaintSlice> slices;
  for (const auto& c : cells) {
    int sw = c.x1 - c.x0, sh = c.y1 - c.y0;
    InpaintSlice slice;
    slice.x = c.x0;
    slice.y = c.y0;
    slice.width = sw;
    slice.height = sh;
    slice.request.image = GrayImage(sw, sh);
    slice.request.mask = BinMask(sw, sh);
    size_t masked = 0;
    for (int yy = 0; yy < sh; ++yy)
      for (int xx = 0; xx < sw; ++xx) {
        slice.request.image.at(xx, yy) = req.image.at(c.x0 + xx, c.y0 + yy);
        bool m = req.mask.at(c.x0 + xx, c.y0 + yy);
        slice.request.mask.set(xx, yy, m);
        masked += m ? 1 : 0;
      }
    if (masked > 0) slices.push_back(std::move(slice));
  }
  return slices;
}

InpaintOutcome inpaint_tiled(const InpaintRequest& req, const InpaintBackend& backend,
                             const TilerConfig& cfg, TiledStats* stats) {
  auto slices = split_for_inpaint(req, cfg);

  InpaintOutcome out;
  out.image = req.image;
  if (stats) {
    stats->slice_count = static_cast<int>(slices.size());
    stats->peak_slice_area = 0;
    stats->backend_calls = 0;
  }
  if (slices.empty()) return out;

  const int w = req.image.width, h = req.image.height;
  std::vector<double> weight_sum(static_cast<size_t>(w) * h, 0.0);
  std::vector<double> value_sum(static_cast<size_t>(w) * h, 0.0);

  for (size_t si = 0; si < slices.size(); ++si) {
    const auto& slice = slices[si];
    if (stats) {
      stats->peak_slice_area =
          std::max<std::int64_t>(stats->peak_slice_area,
                                 static_cast<std::int64_t>(slice.width) * slice.height);
      ++stats->backend_calls;
    }
    InpaintOutcome result;
    try {
      result = backend(slice.request);
    } catch (const Error& e) {
      fail(e.code(), "slice " + std::to_string(si) + ": " + e.what());
    }
    if (result.image.width != slice.width || result.image.height != slice.height)
      fail(Err::DimMismatch, "slice " + std::to_string(si) + ": backend changed dimensions");
    for (auto& note : result.notes) out.notes.push_back("slice " + std::to_string(si) + ": " + note);

    // Masked pixels blend with linear distance-to-slice-border weights.
    for (int yy = 0; yy < slice.height; ++yy)
      for (int xx = 0; xx < slice.width; ++xx) {
        if (!slice.request.mask.at(xx, yy)) continue;
        int gx = slice.x + xx, gy = slice.y + yy;
        double border = 1.0 + std::min(std::min(xx, slice.width - 1 - xx),
                                       std::min(yy, slice.height - 1 - yy));
        size_t gi = static_cast<size_t>(gy) * w + gx;
        weight_sum[gi] += border;
        value_sum[gi] += border * result.image.at(xx, yy);
      }
  }

  for (int i = 0; i < w * h; ++i)
    if (req.mask.data[i] && weight_sum[i] > 0)
      out.image.data[i] = round_u8(value_sum[i] / weight_sum[i]);
  return out;
}

void masked_losses(const GrayImage& reference, const GrayImage& result, const BinMask& mask,
                   double* l1, double* l2) {
  double s1 = 0, s2 = 0;
  size_t n = 0;
  for (size_t i = 0; i < mask.data.size(); ++i) {
    if (!mask.data[i]) continue;
    double d = (static_cast<double>(reference.data[i]) - result.data[i]) / 255.0;
    s1 += std::fabs(d);
    s2 += d * d;
    ++n;
  }
  if (l1) *l1 = n ? s1 / n : 0.0;
  if (l2) *l2 = n ? s2 / n : 0.0;
}

std::string InpaintMetrics::to_json() const {
  nlohmann::json j{{"l1_mean", l1_mean},
                   {"l2_mean", l2_mean},
                   {"wall_time_ms", wall_time_ms},
                   {"slice_count", slice_count},
                   {"peak_slice_area", peak_slice_area}};
  return j.dump();
}

BinMask make_freeform_mask(int width, int height, std::uint64_t seed, int strokes,
                           std::string* params_json) {
  BinMask mask(width, height);
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (rng() >> 11) * 0x1.0p-53;
  };

  const int max_brush = std::max(2, std::min(width, height) / 12);
  const int min_brush = std::max(1, max_brush / 4);
  const int steps_per_stroke = 24;
  const double step_len = std::max(4.0, std::min(width, height) / 16.0);

  for (int s = 0; s < strokes; ++s) {
    double x = uniform(0, width), y = uniform(0, height);
    double angle = uniform(0, 2 * kPi);
    for (int t = 0; t < steps_per_stroke; ++t) {
      angle += uniform(-0.8, 0.8);
      double nx = std::clamp(x + step_len * std::cos(angle), 0.0, width - 1.0);
      double ny = std::clamp(y + step_len * std::sin(angle), 0.0, height - 1.0);
      int brush = min_brush + static_cast<int>(uniform(0, max_brush - min_brush + 1));
      int n = static_cast<int>(std::hypot(nx - x, ny - y)) + 1;
      for (int k = 0; k <= n; ++k) {
        double px = x + (nx - x) * k / n, py = y + (ny - y) * k / n;
        for (int dy = -brush; dy <= brush; ++dy)
          for (int dx = -brush; dx <= brush; ++dx) {
            if (dx * dx + dy * dy > brush * brush) continue;
            int mx = static_cast<int>(px) + dx, my = static_cast<int>(py) + dy;
            if (mx >= 0 && mx < width && my >= 0 && my < height) mask.set(mx, my, true);
          }
      }
      x = nx;
      y = ny;
    }
  }
  // Never mask everything; the request contract forbids it.
  if (mask.count() == mask.data.size()) mask.set(0, 0, false);

  if (params_json) {
    nlohmann::json j{{"seed", seed},
                     {"strokes", strokes},
                     {"steps_per_stroke", steps_per_stroke},
                     {"brush_min", min_brush},
                     {"brush_max", max_brush},
                     {"step_len", step_len}};
    *params_json = j.dump();
  }
  return mask;
}

}  // namespace f3d

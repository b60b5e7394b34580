#include "matting.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <vector>

namespace f3d {

Trimap make_trimap(const ProbMask& mask, const MattingConfig& cfg) {
  Trimap tm(mask.width, mask.height);
  size_t fg = 0;
  // Masks are float32; compare in float space so threshold-exact values land
  // on the certain side.
  const float fg_t = static_cast<float>(cfg.fg_threshold);
  const float bg_t = static_cast<float>(cfg.bg_threshold);
  for (size_t i = 0; i < mask.data.size(); ++i) {
    float p = mask.data[i];
    if (p >= fg_t) {
      tm.data[i] = TrimapLabel::Foreground;
      ++fg;
    } else if (p <= bg_t) {
      tm.data[i] = TrimapLabel::Background;
    } else {
      tm.data[i] = TrimapLabel::Unknown;
    }
  }
  if (fg == 0) fail(Err::DegenerateTrimap, "trimap has no foreground pixel");
  return tm;
}

AlphaMatte solve_matte(const GrayImage& image, const Trimap& trimap, const MattingConfig& cfg) {
  const int w = image.width, h = image.height;
  if (trimap.width != w || trimap.height != h)
    fail(Err::DimMismatch, "trimap dimensions do not match image");

  size_t n_fg = 0, n_bg = 0, n_unknown = 0;
  for (auto l : trimap.data) {
    if (l == TrimapLabel::Foreground) ++n_fg;
    else if (l == TrimapLabel::Background) ++n_bg;
    else ++n_unknown;
  }
  if (n_fg == 0 || n_bg == 0)
    fail(Err::DegenerateTrimap, "matting needs at least one FG and one BG pixel");

  AlphaMatte matte(w, h);
  for (size_t i = 0; i < trimap.data.size(); ++i)
    matte.alpha[i] = trimap.data[i] == TrimapLabel::Foreground ? 1.f : 0.f;
  if (n_unknown == 0) return matte;  // fully constrained

  const int r = cfg.window_radius;
  if (w < 2 * r + 1 || h < 2 * r + 1)
    fail(Err::InvalidArgument, "image too small for the matting window");
  const int win = 2 * r + 1;
  const double wsize = static_cast<double>(win) * win;

  // Index map over unknown pixels only; constrained pixels fold into the rhs.
  std::vector<int> unknown_index(static_cast<size_t>(w) * h, -1);
  std::vector<int> unknown_pixels;
  unknown_pixels.reserve(n_unknown);
  for (int i = 0; i < w * h; ++i) {
    if (trimap.data[i] == TrimapLabel::Unknown) {
      unknown_index[i] = static_cast<int>(unknown_pixels.size());
      unknown_pixels.push_back(i);
    }
  }
  const int n = static_cast<int>(unknown_pixels.size());

  std::vector<double> intensity(image.size());
  for (size_t i = 0; i < image.size(); ++i) intensity[i] = image.data[i] / 255.0;

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  std::vector<int> win_pix(static_cast<size_t>(win) * win);
  for (int cy = r; cy < h - r; ++cy) {
    for (int cx = r; cx < w - r; ++cx) {
      bool touches_unknown = false;
      int k = 0;
      double mean = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          int idx = (cy + dy) * w + (cx + dx);
          win_pix[k++] = idx;
          mean += intensity[idx];
          touches_unknown |= unknown_index[idx] >= 0;
        }
      }
      if (!touches_unknown) continue;
      mean /= wsize;
      double var = 0.0;
      for (int q = 0; q < k; ++q) {
        double d = intensity[win_pix[q]] - mean;
        var += d * d;
      }
      var /= wsize;
      const double inv_cov = 1.0 / (var + cfg.epsilon / wsize);

      // L_ij += delta_ij - (1 + (Ii-mu)(Ij-mu)/(var + eps/|w|)) / |w|
      for (int qi = 0; qi < k; ++qi) {
        int pi = win_pix[qi];
        int ui = unknown_index[pi];
        if (ui < 0) continue;
        double di = intensity[pi] - mean;
        for (int qj = 0; qj < k; ++qj) {
          int pj = win_pix[qj];
          double lij = -(1.0 + di * (intensity[pj] - mean) * inv_cov) / wsize;
          if (pi == pj) lij += 1.0;
          int uj = unknown_index[pj];
          if (uj >= 0) {
            triplets.emplace_back(ui, uj, lij);
          } else if (trimap.data[pj] == TrimapLabel::Foreground) {
            rhs[ui] -= lij;  // alpha_j = 1
          }
        }
      }
    }
  }

  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setMaxIterations(cfg.max_iterations);
  cg.setTolerance(cfg.solver_tolerance);
  cg.compute(A);
  Eigen::VectorXd x = cg.solve(rhs);
  if (cg.info() != Eigen::Success)
    fail(Err::SolverDiverged, "matting solver did not reach tolerance within iteration cap");

  for (int ui = 0; ui < n; ++ui) {
    double a = std::clamp(x[ui], 0.0, 1.0);
    matte.alpha[unknown_pixels[ui]] = static_cast<float>(a);
  }
  return matte;
}

BinMask binarize_matte(const AlphaMatte& matte, const MattingConfig& cfg) {
  BinMask out(matte.width, matte.height);
  for (size_t i = 0; i < matte.alpha.size(); ++i)
    out.data[i] = matte.alpha[i] > cfg.binarize_threshold ? 1 : 0;
  return out;
}

GrayImage matte_to_gray(const AlphaMatte& matte) {
  GrayImage out(matte.width, matte.height);
  for (size_t i = 0; i < matte.alpha.size(); ++i) out.data[i] = round_u8(matte.alpha[i] * 255.0);
  return out;
}

}  // namespace f3d

#pragma once

#include "raster.hpp"

namespace f3d {

// Per-pixel mixing coefficient between foreground and background.
struct AlphaMatte {
  int width = 0;
  int height = 0;
  std::vector<float> alpha;

  AlphaMatte() = default;
  AlphaMatte(int w, int h, float fill = 0.f)
      : width(w), height(h), alpha(static_cast<size_t>(w) * h, fill) {}

  float at(int x, int y) const { return alpha[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return alpha[static_cast<size_t>(y) * width + x]; }
};

struct MattingConfig {
  double fg_threshold = 0.95;     // prob >= fg -> foreground
  double bg_threshold = 0.05;     // prob <= bg -> background
  int window_radius = 1;          // 3x3 windows
  double epsilon = 1e-5;          // regularization of window covariance
  double solver_tolerance = 1e-6; // relative residual
  int max_iterations = 2000;
  double binarize_threshold = 0.1;
};

// Probability mask to {FG, BG, UNKNOWN}: the uncertain band is everything
// strictly between bg_threshold and fg_threshold. Throws DegenerateTrimap when
// no foreground pixel exists.
Trimap make_trimap(const ProbMask& mask, const MattingConfig& cfg = {});

// Closed-form matting restricted to UNKNOWN pixels: constrained pixels keep
// their trimap value exactly, the rest minimize the matting-Laplacian
// quadratic form. Grayscale images give scalar window covariances, so the
// usual 3x3 color covariance degrades to 1D; the formulas below are that
// limit. Solved with diagonal-preconditioned conjugate gradients.
AlphaMatte solve_matte(const GrayImage& image, const Trimap& trimap,
                       const MattingConfig& cfg = {});

// True where alpha > binarize_threshold (0.1 for mattes vs 0.5 for raw
// probability masks).
BinMask binarize_matte(const AlphaMatte& matte, const MattingConfig& cfg = {});

// Matte as an 8-bit plane (alpha*255, round-half-up), the on-disk form.
GrayImage matte_to_gray(const AlphaMatte& matte);

}  // namespace f3d

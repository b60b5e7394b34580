#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "matting.hpp"
#include "oracles.hpp"

using namespace f3d;

namespace {

// FG strip on top, BG strip at the bottom, UNKNOWN band between.
ProbMask banded_mask(int w, int h, int fg_rows, int bg_rows) {
  ProbMask m(w, h, 0.5f);
  for (int y = 0; y < fg_rows; ++y)
    for (int x = 0; x < w; ++x) m.at(x, y) = 1.0f;
  for (int y = h - bg_rows; y < h; ++y)
    for (int x = 0; x < w; ++x) m.at(x, y) = 0.0f;
  return m;
}

GrayImage random_image(int w, int h, std::uint64_t seed) {
  GrayImage img(w, h);
  std::mt19937_64 rng(seed);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() % 256);
  return img;
}

}  // namespace

TEST_CASE("make_trimap thresholds per the 5%/95% rule") {
  ProbMask m(3, 1);
  m.data = {0.97f, 0.5f, 0.02f};
  Trimap tm = make_trimap(m);
  CHECK(tm.at(0, 0) == TrimapLabel::Foreground);
  CHECK(tm.at(1, 0) == TrimapLabel::Unknown);
  CHECK(tm.at(2, 0) == TrimapLabel::Background);

  // Boundary values land on the certain side.
  ProbMask b(2, 1);
  b.data = {0.95f, 0.05f};
  Trimap tb = make_trimap(b);
  CHECK(tb.at(0, 0) == TrimapLabel::Foreground);
  CHECK(tb.at(1, 0) == TrimapLabel::Background);
}

TEST_CASE("make_trimap: all-zero mask is a degenerate trimap") {
  ProbMask m(4, 4, 0.0f);
  try {
    make_trimap(m);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::DegenerateTrimap);
  }
}

TEST_CASE("solve_matte: fully constrained trimap returns the indicator") {
  GrayImage img = random_image(8, 8, 1);
  ProbMask m(8, 8, 0.0f);
  for (int x = 0; x < 8; ++x) m.at(x, 0) = 1.0f;
  Trimap tm = make_trimap(m);
  AlphaMatte matte = solve_matte(img, tm);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(matte.at(x, y) == (y == 0 ? 1.0f : 0.0f));
}

TEST_CASE("solve_matte: monotone transition across an unknown band on a uniform image") {
  GrayImage img(10, 10, 128);
  Trimap tm = make_trimap(banded_mask(10, 10, 2, 2));
  AlphaMatte matte = solve_matte(img, tm);
  // Column-wise alpha must not increase from FG (top) to BG (bottom).
  for (int x = 0; x < 10; ++x)
    for (int y = 1; y < 10; ++y) CHECK(matte.at(x, y) <= matte.at(x, y - 1) + 1e-4f);
  CHECK(matte.at(5, 0) == 1.0f);
  CHECK(matte.at(5, 9) == 0.0f);
}

TEST_CASE("solve_matte matches the dense direct solve within 1e-4 per pixel") {
  MattingConfig cfg;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    GrayImage img = random_image(10, 10, seed);
    Trimap tm = make_trimap(banded_mask(10, 10, 3, 3));
    AlphaMatte matte = solve_matte(img, tm, cfg);
    auto expect = oracle::dense_matte_solve(img, tm, cfg.epsilon);
    for (int i = 0; i < 100; ++i)
      CHECK(std::fabs(matte.alpha[i] - expect[i]) < 1e-4);
  }
}

TEST_CASE("trimap constraints hold exactly on constrained pixels") {
  GrayImage img = random_image(12, 12, 3);
  Trimap tm = make_trimap(banded_mask(12, 12, 4, 4));
  AlphaMatte matte = solve_matte(img, tm);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      if (tm.at(x, y) == TrimapLabel::Foreground) CHECK(matte.at(x, y) == 1.0f);
      if (tm.at(x, y) == TrimapLabel::Background) CHECK(matte.at(x, y) == 0.0f);
    }
}

TEST_CASE("matting Laplacian rows sum to zero") {
  for (std::uint64_t seed : {21u, 22u}) {
    GrayImage img = random_image(6, 6, seed);
    Eigen::MatrixXd L = oracle::dense_matting_laplacian(img, 1e-5);
    Eigen::VectorXd rowsum = L.rowwise().sum();
    for (int i = 0; i < rowsum.size(); ++i) CHECK(std::fabs(rowsum[i]) < 1e-10);
  }
}

TEST_CASE("matte is invariant to a global intensity shift") {
  GrayImage img = random_image(10, 10, 5);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(40 + v % 150);  // headroom for +20
  GrayImage shifted = img;
  for (auto& v : shifted.data) v = static_cast<std::uint8_t>(v + 20);

  Trimap tm = make_trimap(banded_mask(10, 10, 3, 3));
  AlphaMatte a = solve_matte(img, tm);
  AlphaMatte b = solve_matte(shifted, tm);
  for (size_t i = 0; i < a.alpha.size(); ++i)
    CHECK(std::fabs(a.alpha[i] - b.alpha[i]) < 1e-4);
}

TEST_CASE("solve_matte needs both FG and BG") {
  GrayImage img(6, 6, 100);
  ProbMask m(6, 6, 1.0f);  // everything foreground
  Trimap tm = make_trimap(m);
  try {
    solve_matte(img, tm);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::DegenerateTrimap);
  }
}

TEST_CASE("solver that cannot reach tolerance reports divergence") {
  GrayImage img = random_image(10, 10, 9);
  Trimap tm = make_trimap(banded_mask(10, 10, 2, 2));
  MattingConfig cfg;
  cfg.max_iterations = 1;
  cfg.solver_tolerance = 1e-14;
  try {
    solve_matte(img, tm, cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::SolverDiverged);
  }
}

TEST_CASE("binarize_matte uses the 0.1 matte threshold") {
  AlphaMatte m(3, 1);
  m.alpha = {0.2f, 0.05f, 1.0f};
  BinMask b = binarize_matte(m);
  CHECK(b.at(0, 0));
  CHECK_FALSE(b.at(1, 0));
  CHECK(b.at(2, 0));

  AlphaMatte ones(4, 4, 1.0f);
  CHECK(binarize_matte(ones).count() == 16);
}

TEST_CASE("matte_to_gray rounds half up") {
  AlphaMatte m(2, 1);
  m.alpha = {0.5f, 1.0f};
  GrayImage g = matte_to_gray(m);
  CHECK(g.data[0] == 128);  // 127.5 rounds up
  CHECK(g.data[1] == 255);
}

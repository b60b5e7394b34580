#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <jpeglib.h>
#include <png.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "image_io.hpp"
#include "raster.hpp"

using namespace f3d;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Test-side writers, independent of the library's save paths.
void write_rgb_png(const std::string& path, int w, int h,
                   const std::vector<std::uint8_t>& rgb) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(&rgb[static_cast<size_t>(y) * w * 3]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void write_gray16_png(const std::string& path, int w, int h,
                      const std::vector<std::uint16_t>& gray) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {  // big-endian per PNG
      row[2 * x] = static_cast<std::uint8_t>(gray[static_cast<size_t>(y) * w + x] >> 8);
      row[2 * x + 1] = static_cast<std::uint8_t>(gray[static_cast<size_t>(y) * w + x] & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void write_gray_jpeg(const std::string& path, int w, int h,
                     const std::vector<std::uint8_t>& gray, int quality) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = w;
  cinfo.image_height = h;
  cinfo.input_components = 1;
  cinfo.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(&gray[static_cast<size_t>(cinfo.next_scanline) * w]);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(f);
}

// Brute-force digital-line oracle: the pixel count of an 8-connected line with
// one step per dominant-axis increment.
size_t digital_line_pixel_oracle(PixelCoord a, PixelCoord b) {
  return static_cast<size_t>(std::max(std::abs(b.x - a.x), std::abs(b.y - a.y))) + 1;
}

}  // namespace

TEST_CASE("luminance uses BT.601 with round-half-up") {
  // 0.299*255 = 76.245 -> 76 under the pinned weights.
  CHECK(luminance(255, 0, 0) == 76);
  CHECK(luminance(0, 255, 0) == round_u8(0.587 * 255));
  CHECK(luminance(0, 0, 255) == round_u8(0.114 * 255));
  CHECK(luminance(255, 255, 255) == 255);
  CHECK(luminance(0, 0, 0) == 0);
}

TEST_CASE("load_image: white PNG identity case") {
  GrayImage img(2, 2, 255);
  auto path = temp_path("f3d_white.png");
  save_gray_png(img, path);
  GrayImage back = load_image(path);
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  for (auto v : back.data) CHECK(v == 255);
}

TEST_CASE("load_image: missing path is UnreadableFile") {
  CHECK_THROWS_AS(load_image("/nonexistent/nope.png"), Error);
  try {
    load_image("/nonexistent/nope.png");
  } catch (const Error& e) {
    CHECK(e.code() == Err::UnreadableFile);
  }
}

TEST_CASE("load_image: garbage bytes are UnsupportedFormat") {
  auto path = temp_path("f3d_garbage.bin");
  std::ofstream f(path, std::ios::binary);
  f << "this is not an image";
  f.close();
  try {
    load_image(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::UnsupportedFormat);
  }
}

TEST_CASE("load_image: RGB PNG converts through the pinned luminance weights") {
  // One red, one green, one blue, one gray pixel.
  std::vector<std::uint8_t> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255, 200, 200, 200};
  auto path = temp_path("f3d_rgb.png");
  write_rgb_png(path, 4, 1, rgb);
  GrayImage img = load_image(path);
  CHECK(img.data[0] == 76);  // 0.299*255 = 76.245, round-half-up
  CHECK(img.data[1] == round_u8(0.587 * 255));
  CHECK(img.data[2] == round_u8(0.114 * 255));
  CHECK(img.data[3] == 200);
}

TEST_CASE("load_image: 16-bit PNG rescales rather than truncates") {
  std::vector<std::uint16_t> gray = {0, 65535, 32768, 257};
  auto path = temp_path("f3d_gray16.png");
  write_gray16_png(path, 4, 1, gray);
  GrayImage img = load_image(path);
  CHECK(img.data[0] == 0);
  CHECK(img.data[1] == 255);
  CHECK(std::abs(static_cast<int>(img.data[2]) - 128) <= 1);  // 32768*255/65535
  CHECK(img.data[3] == 1);  // 257/65535*255 ~ 1; a >>8 truncation would also give 1,
                            // but 65535 above distinguishes the policies
}

TEST_CASE("load_image: JPEG input decodes within lossy tolerance") {
  const int w = 64, h = 48;
  std::vector<std::uint8_t> gray(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      gray[static_cast<size_t>(y) * w + x] = static_cast<std::uint8_t>(40 + 2 * x + y);
  auto path = temp_path("f3d_gradient.jpg");
  write_gray_jpeg(path, w, h, gray, 95);
  GrayImage img = load_image(path);
  REQUIRE(img.width == w);
  REQUIRE(img.height == h);
  double err = 0;
  for (size_t i = 0; i < gray.size(); ++i)
    err += std::abs(static_cast<int>(img.data[i]) - static_cast<int>(gray[i]));
  CHECK(err / gray.size() < 3.0);
}

TEST_CASE("PNG round-trip is bit-exact on 8-bit gray") {
  GrayImage img(17, 9);
  for (size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<std::uint8_t>((i * 37) % 256);
  auto path = temp_path("f3d_roundtrip.png");
  save_gray_png(img, path);
  GrayImage back = load_image(path);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("rasterize_segment axis-aligned and diagonal") {
  auto h = rasterize_segment({0, 0}, {3, 0}, 10, 10);
  CHECK(h == std::vector<PixelCoord>{{0, 0}, {1, 0}, {2, 0}, {3, 0}});

  auto d = rasterize_segment({0, 0}, {2, 2}, 10, 10);
  CHECK(d == std::vector<PixelCoord>{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("rasterize_segment pixel count matches the dominant-axis oracle") {
  CHECK(rasterize_segment({0, 0}, {5, 2}, 10, 10).size() ==
        digital_line_pixel_oracle({0, 0}, {5, 2}));
  for (int dx = -7; dx <= 7; dx += 3)
    for (int dy = -7; dy <= 7; dy += 2) {
      if (dx == 0 && dy == 0) continue;
      Point2 a{10, 10}, b{10.0 + dx, 10.0 + dy};
      CHECK(rasterize_segment(a, b, 32, 32).size() ==
            digital_line_pixel_oracle({10, 10}, {10 + dx, 10 + dy}));
    }
}

TEST_CASE("rasterize_segment reversal symmetry as a set") {
  std::mt19937_64 rng(7);
  auto coord = [&](double span) { return (rng() % 10000) / 10000.0 * span; };
  for (int trial = 0; trial < 200; ++trial) {
    Point2 a{coord(40), coord(40)}, b{coord(40), coord(40)};
    if (dist(a, b) < 1e-9) continue;
    auto fwd = rasterize_segment(a, b, 48, 48);
    auto rev = rasterize_segment(b, a, 48, 48);
    CHECK(std::set<PixelCoord>(fwd.begin(), fwd.end()) ==
          std::set<PixelCoord>(rev.begin(), rev.end()));
  }
}

TEST_CASE("rasterize_segment clips to bounds") {
  auto out = rasterize_segment({-5, -5}, {-1, -1}, 10, 10);
  CHECK(out.empty());
  auto partial = rasterize_segment({-2, 0}, {2, 0}, 10, 10);
  for (auto p : partial) {
    CHECK(p.x >= 0);
    CHECK(p.x < 10);
  }
  CHECK(partial.size() == 3);  // pixels 0,1,2
}

TEST_CASE("threshold_mask is strict >") {
  ProbMask m(3, 1);
  m.data = {0.4f, 0.5f, 0.6f};
  BinMask b = threshold_mask(m, 0.5f);
  CHECK_FALSE(b.at(0, 0));
  CHECK_FALSE(b.at(1, 0));  // equal is not greater
  CHECK(b.at(2, 0));
}

TEST_CASE("gray+alpha round trip keeps the gray plane") {
  GrayImage img(5, 4);
  for (size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<std::uint8_t>(13 * i);
  std::vector<std::uint8_t> alpha(img.size(), 200);
  auto path = temp_path("f3d_ga.png");
  save_gray_alpha_png(img, alpha, path);
  GrayImage back = load_image(path);  // alpha stripped on load
  CHECK(back.data == img.data);
}

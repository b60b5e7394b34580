#include "image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

namespace f3d {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode, Err on_fail) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(on_fail, "cannot open file: " + path);
  return f;
}

GrayImage gray_from_interleaved(int w, int h, int channels,
                                const std::vector<std::uint8_t>& buf) {
  GrayImage img(w, h);
  for (size_t i = 0; i < img.size(); ++i) {
    const std::uint8_t* px = &buf[i * channels];
    img.data[i] = channels >= 3 ? luminance(px[0], px[1], px[2]) : px[0];
  }
  return img;
}

std::vector<std::uint8_t> read_png_pixels(const std::string& path, bool keep_alpha, int* out_w,
                                          int* out_h, int* out_channels) {
  FilePtr f = open_file(path, "rb", Err::UnreadableFile);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Err::UnreadableFile, "libpng init failed for " + path);
  }
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Err::UnreadableFile, "corrupt PNG: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_scale_16(png);  // 16-bit inputs rescaled, not truncated
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (!keep_alpha) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  int channels = png_get_channels(png, info);
  size_t stride = png_get_rowbytes(png, info);

  buf.resize(stride * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  // Repack in case stride != w*channels.
  std::vector<std::uint8_t> packed(static_cast<size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y)
    std::memcpy(&packed[static_cast<size_t>(y) * w * channels], &buf[stride * y],
                static_cast<size_t>(w) * channels);
  *out_w = w;
  *out_h = h;
  *out_channels = channels;
  return packed;
}

GrayImage load_png(const std::string& path) {
  int w, h, channels;
  auto packed = read_png_pixels(path, /*keep_alpha=*/false, &w, &h, &channels);
  if (channels != 1 && channels != 3)
    fail(Err::UnsupportedFormat, "unexpected PNG channel count in " + path);
  return gray_from_interleaved(w, h, channels, packed);
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

GrayImage load_jpeg(const std::string& path) {
  FilePtr f = open_file(path, "rb", Err::UnreadableFile);

  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(Err::UnreadableFile, "corrupt JPEG: " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  // Decode to RGB (or native grayscale) and apply our own luminance weights.
  if (cinfo.jpeg_color_space != JCS_GRAYSCALE) cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  int w = static_cast<int>(cinfo.output_width);
  int h = static_cast<int>(cinfo.output_height);
  int channels = cinfo.output_components;
  std::vector<std::uint8_t> buf(static_cast<size_t>(w) * h * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() + static_cast<size_t>(cinfo.output_scanline) * w * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  if (channels != 1 && channels != 3)
    fail(Err::UnsupportedFormat, "unexpected JPEG channel count in " + path);
  return gray_from_interleaved(w, h, channels, buf);
}

void write_png(int w, int h, int color_type, int channels, const std::uint8_t* pixels,
               const std::string& path) {
  FilePtr f = open_file(path, "wb", Err::WriteFailure);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(Err::WriteFailure, "libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(Err::WriteFailure, "PNG write failed: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(pixels + static_cast<size_t>(y) * w * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

GrayImage load_image(const std::string& path) {
  FilePtr f = open_file(path, "rb", Err::UnreadableFile);
  unsigned char magic[8] = {0};
  size_t n = std::fread(magic, 1, sizeof magic, f.get());
  f.reset();
  if (n >= 8 && png_sig_cmp(magic, 0, 8) == 0) return load_png(path);
  if (n >= 2 && magic[0] == 0xff && magic[1] == 0xd8) return load_jpeg(path);
  fail(Err::UnsupportedFormat, "not a PNG or JPEG file: " + path);
}

ProbMask load_prob_mask(const std::string& path) {
  GrayImage img = load_image(path);
  ProbMask mask(img.width, img.height);
  for (size_t i = 0; i < img.size(); ++i) mask.data[i] = img.data[i] / 255.0f;
  return mask;
}

std::pair<GrayImage, std::vector<std::uint8_t>> load_gray_alpha_png(const std::string& path) {
  int w, h, channels;
  auto packed = read_png_pixels(path, /*keep_alpha=*/true, &w, &h, &channels);
  GrayImage img(w, h);
  std::vector<std::uint8_t> alpha(img.size(), 255);
  for (size_t i = 0; i < img.size(); ++i) {
    const std::uint8_t* px = &packed[i * channels];
    img.data[i] = channels >= 3 ? luminance(px[0], px[1], px[2]) : px[0];
    if (channels == 2) alpha[i] = px[1];
    if (channels == 4) alpha[i] = px[3];
  }
  return {std::move(img), std::move(alpha)};
}

void save_gray_png(const GrayImage& img, const std::string& path) {
  write_png(img.width, img.height, PNG_COLOR_TYPE_GRAY, 1, img.data.data(), path);
}

void save_gray_alpha_png(const GrayImage& img, const std::vector<std::uint8_t>& alpha,
                         const std::string& path) {
  if (alpha.size() != img.size()) fail(Err::DimMismatch, "alpha plane size mismatch");
  std::vector<std::uint8_t> interleaved(img.size() * 2);
  for (size_t i = 0; i < img.size(); ++i) {
    interleaved[2 * i] = img.data[i];
    interleaved[2 * i + 1] = alpha[i];
  }
  write_png(img.width, img.height, PNG_COLOR_TYPE_GRAY_ALPHA, 2, interleaved.data(), path);
}

void save_rgba_png(int width, int height, const std::vector<std::uint8_t>& rgba,
                   const std::string& path) {
  if (rgba.size() != static_cast<size_t>(width) * height * 4)
    fail(Err::DimMismatch, "rgba buffer size mismatch");
  write_png(width, height, PNG_COLOR_TYPE_RGBA, 4, rgba.data(), path);
}

}  // namespace f3d

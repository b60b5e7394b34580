#pragma once

#include <string>
#include <vector>

#include "raster.hpp"

namespace f3d {

// Reads a PNG or JPEG file as 8-bit grayscale. Color inputs are converted with
// BT.601 luminance, 16-bit PNGs are rescaled to 8-bit, alpha is ignored.
// Throws UnreadableFile / UnsupportedFormat.
GrayImage load_image(const std::string& path);

// Grayscale PNG interpreted as a probability mask (value / 255).
ProbMask load_prob_mask(const std::string& path);

// Gray+alpha PNG; alpha comes back 255 when the file has no alpha channel.
std::pair<GrayImage, std::vector<std::uint8_t>> load_gray_alpha_png(const std::string& path);

// 8-bit grayscale PNG. Round-trips bit-exactly through load_image.
void save_gray_png(const GrayImage& img, const std::string& path);

// 8-bit gray+alpha PNG (two channels); alpha vector is row-major w*h.
void save_gray_alpha_png(const GrayImage& img, const std::vector<std::uint8_t>& alpha,
                         const std::string& path);

// 8-bit RGBA PNG from an interleaved w*h*4 buffer.
void save_rgba_png(int width, int height, const std::vector<std::uint8_t>& rgba,
                   const std::string& path);

}  // namespace f3d

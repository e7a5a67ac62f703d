#pragma once

#include <cstddef>
#include <filesystem>

#include "mvmae/data/study.hpp"

namespace mvmae::data {

// Netpbm grayscale (P2 ascii or P5 binary, maxval up to 65535). Pixel values
// are returned divided by maxval, so they lie in [0, 1].
Image read_pgm(const std::filesystem::path& path);

// Writes a binary 16-bit PGM; values are clamped to [0, 1] and quantized.
void write_pgm16(const std::filesystem::path& path, const Image& image);

// Separable triangle-filter resampling. The filter support widens with the
// downscale factor, so shrinking is antialiased; growing is plain bilinear.
Image resize(const Image& src, std::size_t height, std::size_t width);

// Resize the shorter side to round(side * 256 / 224), center-crop to
// side x side, then min-max rescale to [0, 1] (constant images map to 0).
Image preprocess_image(const Image& raw, std::size_t side);

// Intermediate shorter-side length used by preprocess_image.
std::size_t resize_target(std::size_t side);

}  // namespace mvmae::data

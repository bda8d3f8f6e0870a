#pragma once

#include <filesystem>
#include <string>

#include "eigenhearts/image.hpp"

namespace eigenhearts {

/// Decodes a binary (P5) PGM. Stored values are divided by the header's
/// maxval, so 8-bit 255 maps to 1.0. 16-bit files (maxval > 255) are read
/// big-endian as the format requires.
Image decode_pgm(const std::string& bytes, const std::string& name = "<memory>");
Image read_pgm(const std::filesystem::path& path);

/// Encodes an 8-bit P5 PGM. Pixels are clamped to [0,1] and rounded to the
/// nearest multiple of 1/255.
std::string encode_pgm(const Image& image);
void write_pgm(const std::filesystem::path& path, const Image& image);

/// The value an 8-bit PGM round trip yields for a pixel.
inline double quantize_8bit(double value) {
  const double clamped = value < 0.0 ? 0.0 : (value > 1.0 ? 1.0 : value);
  return static_cast<double>(static_cast<int>(clamped * 255.0 + 0.5)) / 255.0;
}

}  // namespace eigenhearts

#pragma once

#include <filesystem>
#include <vector>

#include "marsdust/image.hpp"

namespace marsdust {

/// Reads an 8- or 16-bit grayscale or RGB PNG, scaling samples by 1/255 or
/// 1/65535. Palette, alpha and sub-byte depths are rejected with DecodeError;
/// a missing or unreadable file raises IoError.
Image load_image(const std::filesystem::path& path);

/// Writes img as PNG with the given bit depth (8 or 16). Samples are quantized
/// with round-half-up: floor(s * max + 0.5).
void save_image(const Image& img, const std::filesystem::path& path, int bit_depth = 8);

/// Quantized level of sample s at the given bit depth.
unsigned quantize_sample(double s, int bit_depth);

/// Sorted list of *.png files directly inside dir. Throws IoError if dir is
/// not a readable directory.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

}  // namespace marsdust

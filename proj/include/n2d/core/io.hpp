#pragma once

#include <filesystem>
#include <string>

#include "n2d/core/image.hpp"

namespace n2d {

/// Reads an 8- or 16-bit grayscale/RGB raster and scales it to [0,1].
/// Throws DataError on a missing file, an unsupported layout or corrupt data.
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit raster (values rounded to the nearest of 256 levels).
void save_image(const std::filesystem::path& path, const Image& img);

/// Masks are stored as 8-bit single channel images: 0 background, 255 foreground.
void save_mask(const std::filesystem::path& path, const Mask& mask);

/// Any nonzero pixel is foreground.
Mask load_mask(const std::filesystem::path& path, int frame_index = -1);

/// Zero-padded frame filename, e.g. frame_name(7) == "000007.png".
std::string frame_name(int index, const std::string& prefix = "", const std::string& ext = ".png");

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace n2d

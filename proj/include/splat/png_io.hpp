#pragma once

#include <cstdint>
#include <filesystem>

#include "splat/image.hpp"

namespace splat {

// 8-bit PNG of any colour type, expanded to RGB (alpha dropped).
Image<std::uint8_t> read_png_rgb8(const std::filesystem::path& path);

// 16-bit grayscale PNG (the TUM depth encoding).
Image<std::uint16_t> read_png_gray16(const std::filesystem::path& path);

void write_png_rgb8(const std::filesystem::path& path, const Image<std::uint8_t>& img);
void write_png_gray16(const std::filesystem::path& path, const Image<std::uint16_t>& img);

}  // namespace splat

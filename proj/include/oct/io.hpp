#pragma once

#include <filesystem>

#include "oct/image.hpp"

namespace oct {

enum class BitDepth { u8 = 8, u16 = 16 };

// Reads an 8- or 16-bit grayscale PNG/TIFF and maps intensities to [0,1] by
// dividing by the format maximum. The B-scan id is the file stem.
BScan load_image(const std::filesystem::path& path, ImageKind kind = ImageKind::clean);

// Writes intensities (clipped to [0,1]) rounded to the nearest code value.
void save_image(const Image& image, const std::filesystem::path& path, BitDepth depth = BitDepth::u8);
inline void save_image(const BScan& scan, const std::filesystem::path& path, BitDepth depth = BitDepth::u8) {
    save_image(scan.image(), path, depth);
}

ShadowMask load_mask(const std::filesystem::path& path);
void save_mask(const ShadowMask& mask, const std::filesystem::path& path);

}  // namespace oct

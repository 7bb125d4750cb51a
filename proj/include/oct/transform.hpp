#pragma once

#include "oct/image.hpp"

namespace oct {

// Bilinear resampling (pixel-center aligned). Identity targets return an
// exact copy.
Image resize(const Image& image, int target_height, int target_width);
BScan resize(const BScan& scan, int target_height, int target_width);

// (x - min) / (max - min). A constant image maps to all zeros.
Image min_max_scale(const Image& image);
BScan min_max_scale(const BScan& scan);

enum class FitMode { resize, pad };

// Brings an image to network dimensions and back. `pad` places the image at
// the top-left corner and zero-fills the remainder; it requires the target to
// be at least as large as the source.
Image fit_to(const Image& image, int target_height, int target_width, FitMode mode);
Image unfit_from(const Image& fitted, int original_height, int original_width, FitMode mode);

}  // namespace oct

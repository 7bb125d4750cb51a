#pragma once

#include <cstdint>
#include <random>

#include "oct/image.hpp"

namespace oct {

// field = u * g, u ~ U(amplitude_low, amplitude_high) once per image,
// g ~ N(gaussian_mu, gaussian_sigma) per pixel.
struct NoiseParams {
    double amplitude_low = 0.02;
    double amplitude_high = 0.5;
    double gaussian_mu = 0.0;
    double gaussian_sigma = 1.0;

    // Accepts low == high (including the all-zero override).
    void validate() const;
};

Image sample_noise(int height, int width, const NoiseParams& params, std::uint64_t seed);

// clip(image + field, 0, 1), tagged as noisy.
BScan add_noise(const BScan& image, const Image& field);

struct AugmentParams {
    double rotation_degrees = 45.0;  // symmetric range
    double translate_fraction = 0.5;
    double scale_fraction = 0.5;
    double hflip_probability = 0.5;

    void validate() const;
};

// One concrete draw. Applied as rotation, then scale, then translation (all
// about the image centre), then horizontal flip.
struct AugmentDraw {
    double rotation_degrees = 0.0;
    double translate_x = 0.0;  // fraction of width
    double translate_y = 0.0;  // fraction of height
    double scale = 1.0;
    bool hflip = false;

    bool is_identity() const {
        return rotation_degrees == 0.0 && translate_x == 0.0 && translate_y == 0.0 && scale == 1.0 && !hflip;
    }
};

AugmentDraw draw_augmentation(const AugmentParams& params, std::mt19937_64& rng);

// Warps one image with the draw (bilinear, zero fill outside the frame).
Image warp(const Image& image, const AugmentDraw& draw);

// Same transform on clean, noisy and mask; the mask is re-binarized at 0.5.
ImagePair apply_augmentation(const ImagePair& pair, const AugmentDraw& draw);
ImagePair augment(const ImagePair& pair, const AugmentParams& params, std::uint64_t seed);

}  // namespace oct

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oct/image.hpp"

namespace oct {

enum class RoiLabel { tissue, background, shadowed, shadow_free };

const char* to_string(RoiLabel label);

struct Roi {
    int row = 0;
    int col = 0;
    int height = 0;
    int width = 0;
    RoiLabel label = RoiLabel::tissue;

    bool inside(int image_height, int image_width) const {
        return row >= 0 && col >= 0 && height > 0 && width > 0 && row + height <= image_height &&
               col + width <= image_width;
    }
    bool operator==(const Roi&) const = default;
};

// Mean gradient magnitude over all pixels divided by sqrt(2). Gradients are
// central differences with replicated edges, so an edge pixel sees half the
// one-sided difference.
double agm(const Image& image);

// -10 log10(sum (f0 - f)^2 / sum f0^2) with f0 the reference. Returns
// +infinity for identical images; throws ArgumentError on an all-zero
// reference.
double paper_psnr(const Image& processed, const Image& reference);

// Conventional 10 log10(peak^2 / MSE); +infinity for identical images.
double standard_psnr(const Image& processed, const Image& reference, double peak = 1.0);

// Mean over tissue ROIs of |mu_r - mu_b| / sqrt(0.5 (var_r + var_b)), with
// population variances and the background statistics taken once.
double cnr(const Image& image, std::span<const Roi> tissue, const Roi& background);

// The background strip at the top of a B-scan.
Roi background_roi(int image_width, int strip_height = 20);

struct SsimOptions {
    int window = 7;
    double data_range = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;
};

// Uniform-window SSIM with sample (N-1) statistics, averaged over every
// window position that lies fully inside the image.
double ssim(const Image& x, const Image& y, const SsimOptions& options = {});

// |(I1 - I2) / (I1 + I2)| with I1 the mean over shadow-free ROIs and I2 the
// mean over shadowed ROIs.
double ilc(const Image& image, std::span<const Roi> shadow_free, std::span<const Roi> shadowed);

struct LpiProfile {
    std::vector<double> profile;  // one mean per column
    double flatness = 0.0;        // population std / mean
};

// Per-column mean over rows [path[c] - half, path[c] + half].
LpiProfile lpi_profile(const Image& image, std::span<const int> layer_path, int band_halfwidth);

// Uniformly samples `count` distinct size x size placements fully contained
// in `region`. Throws SamplingError when fewer placements exist.
std::vector<Roi> sample_rois(const PixelSet& region, int count, int size, std::uint64_t seed,
                             RoiLabel label = RoiLabel::tissue);

// Every size x size top-left position fully inside `region`, row-major.
std::vector<Roi> roi_placements(const PixelSet& region, int size, RoiLabel label = RoiLabel::tissue);

bool roi_intersects(const Roi& roi, const PixelSet& set);

}  // namespace oct

#include "oct/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "oct/error.hpp"

namespace oct {
namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw ArgumentError(std::string(what) + ": image shapes differ");
}

struct RoiStats {
    double mean = 0.0;
    double variance = 0.0;
};

RoiStats roi_stats(const Image& image, const Roi& roi) {
    if (!roi.inside(image.height(), image.width())) throw ArgumentError("ROI lies outside the image");
    const double n = static_cast<double>(roi.height) * roi.width;
    double sum = 0.0;
    for (int r = roi.row; r < roi.row + roi.height; ++r)
        for (int c = roi.col; c < roi.col + roi.width; ++c) sum += image(r, c);
    RoiStats s;
    s.mean = sum / n;
    double sq = 0.0;
    for (int r = roi.row; r < roi.row + roi.height; ++r)
        for (int c = roi.col; c < roi.col + roi.width; ++c) {
            const double d = image(r, c) - s.mean;
            sq += d * d;
        }
    s.variance = sq / n;
    return s;
}

double mean_over(const Image& image, std::span<const Roi> rois) {
    double sum = 0.0;
    double n = 0.0;
    for (const Roi& roi : rois) {
        const RoiStats s = roi_stats(image, roi);
        sum += s.mean * roi.height * roi.width;
        n += static_cast<double>(roi.height) * roi.width;
    }
    return sum / n;
}

}  // namespace

const char* to_string(RoiLabel label) {
    switch (label) {
        case RoiLabel::tissue: return "tissue";
        case RoiLabel::background: return "background";
        case RoiLabel::shadowed: return "shadowed";
        case RoiLabel::shadow_free: return "shadow_free";
    }
    return "unknown";
}

double agm(const Image& image) {
    const int h = image.height();
    const int w = image.width();
    if (h < 2 || w < 2) throw ArgumentError("agm needs an image of at least 2x2");
    double total = 0.0;
    for (int r = 0; r < h; ++r) {
        const int up = std::max(r - 1, 0);
        const int down = std::min(r + 1, h - 1);
        for (int c = 0; c < w; ++c) {
            const int left = std::max(c - 1, 0);
            const int right = std::min(c + 1, w - 1);
            const double gy = 0.5 * (static_cast<double>(image(down, c)) - image(up, c));
            const double gx = 0.5 * (static_cast<double>(image(r, right)) - image(r, left));
            total += std::sqrt(gx * gx + gy * gy);
        }
    }
    return total / (static_cast<double>(h) * w) / std::numbers::sqrt2;
}

double paper_psnr(const Image& processed, const Image& reference) {
    require_same_shape(processed, reference, "paper_psnr");
    double err = 0.0;
    double energy = 0.0;
    auto p = processed.pixels();
    auto f = reference.pixels();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(f[i]) - p[i];
        err += d * d;
        energy += static_cast<double>(f[i]) * f[i];
    }
    if (!(energy > 0.0)) throw ArgumentError("paper_psnr: reference image is all zero");
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(err / energy);
}

double standard_psnr(const Image& processed, const Image& reference, double peak) {
    require_same_shape(processed, reference, "standard_psnr");
    double err = 0.0;
    auto p = processed.pixels();
    auto f = reference.pixels();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(f[i]) - p[i];
        err += d * d;
    }
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = err / static_cast<double>(p.size());
    return 10.0 * std::log10(peak * peak / mse);
}

Roi background_roi(int image_width, int strip_height) {
    return Roi{0, 0, strip_height, image_width, RoiLabel::background};
}

double cnr(const Image& image, std::span<const Roi> tissue, const Roi& background) {
    if (tissue.empty()) throw ArgumentError("cnr needs at least one tissue ROI");
    const RoiStats b = roi_stats(image, background);
    double sum = 0.0;
    for (const Roi& roi : tissue) {
        const RoiStats r = roi_stats(image, roi);
        const double pooled = 0.5 * (r.variance + b.variance);
        if (!(pooled > 0.0)) throw DegenerateError("cnr undefined: zero variance in tissue and background ROIs");
        sum += std::abs(r.mean - b.mean) / std::sqrt(pooled);
    }
    return sum / static_cast<double>(tissue.size());
}

double ssim(const Image& x, const Image& y, const SsimOptions& options) {
    require_same_shape(x, y, "ssim");
    const int win = options.window;
    if (win < 2 || x.height() < win || x.width() < win) throw ArgumentError("ssim: image smaller than window");
    const int h = x.height();
    const int w = x.width();
    // Summed-area tables of x, y, x^2, y^2, xy.
    const int sw = w + 1;
    std::vector<double> sx((h + 1) * sw), sy((h + 1) * sw), sxx((h + 1) * sw), syy((h + 1) * sw), sxy((h + 1) * sw);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double a = x(r, c);
            const double b = y(r, c);
            const int i = (r + 1) * sw + c + 1;
            const int up = r * sw + c + 1;
            const int left = (r + 1) * sw + c;
            const int diag = r * sw + c;
            sx[i] = a + sx[up] + sx[left] - sx[diag];
            sy[i] = b + sy[up] + sy[left] - sy[diag];
            sxx[i] = a * a + sxx[up] + sxx[left] - sxx[diag];
            syy[i] = b * b + syy[up] + syy[left] - syy[diag];
            sxy[i] = a * b + sxy[up] + sxy[left] - sxy[diag];
        }
    }
    auto box = [&](const std::vector<double>& s, int r, int c) {
        return s[(r + win) * sw + c + win] - s[r * sw + c + win] - s[(r + win) * sw + c] + s[r * sw + c];
    };
    const double n = static_cast<double>(win) * win;
    const double cov_norm = n / (n - 1.0);
    const double c1 = std::pow(options.k1 * options.data_range, 2);
    const double c2 = std::pow(options.k2 * options.data_range, 2);
    double total = 0.0;
    int count = 0;
    for (int r = 0; r + win <= h; ++r) {
        for (int c = 0; c + win <= w; ++c) {
            const double mx = box(sx, r, c) / n;
            const double my = box(sy, r, c) / n;
            const double vx = cov_norm * (box(sxx, r, c) / n - mx * mx);
            const double vy = cov_norm * (box(syy, r, c) / n - my * my);
            const double vxy = cov_norm * (box(sxy, r, c) / n - mx * my);
            total += ((2.0 * mx * my + c1) * (2.0 * vxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / count;
}

double ilc(const Image& image, std::span<const Roi> shadow_free, std::span<const Roi> shadowed) {
    if (shadow_free.empty() || shadowed.empty()) throw ArgumentError("ilc needs shadow-free and shadowed ROIs");
    const double i1 = mean_over(image, shadow_free);
    const double i2 = mean_over(image, shadowed);
    if (!(i1 + i2 != 0.0)) throw DegenerateError("ilc undefined: both regions have zero intensity");
    return std::abs((i1 - i2) / (i1 + i2));
}

LpiProfile lpi_profile(const Image& image, std::span<const int> layer_path, int band_halfwidth) {
    if (static_cast<int>(layer_path.size()) != image.width())
        throw ArgumentError("layer path must have one row per column");
    if (band_halfwidth < 0) throw ArgumentError("band half-width must be non-negative");
    LpiProfile out;
    out.profile.resize(layer_path.size());
    for (int c = 0; c < image.width(); ++c) {
        const int lo = layer_path[c] - band_halfwidth;
        const int hi = layer_path[c] + band_halfwidth;
        if (lo < 0 || hi >= image.height()) throw ArgumentError("layer path band leaves the image at column " +
                                                                std::to_string(c));
        double sum = 0.0;
        for (int r = lo; r <= hi; ++r) sum += image(r, c);
        out.profile[c] = sum / (hi - lo + 1);
    }
    double mean = 0.0;
    for (double v : out.profile) mean += v;
    mean /= static_cast<double>(out.profile.size());
    double var = 0.0;
    for (double v : out.profile) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(out.profile.size()));
    if (sd == 0.0) out.flatness = 0.0;
    else if (mean == 0.0) throw DegenerateError("lpi flatness undefined for a zero-mean profile");
    else out.flatness = sd / mean;
    return out;
}

}  // namespace oct

#include <random>

#include "oct/error.hpp"
#include "oct/metrics.hpp"

namespace oct {

std::vector<Roi> roi_placements(const PixelSet& region, int size, RoiLabel label) {
    if (size < 1) throw ArgumentError("ROI size must be positive");
    const int h = region.height();
    const int w = region.width();
    std::vector<Roi> out;
    if (h < size || w < size) return out;
    // integral image of the region's membership
    const int sw = w + 1;
    std::vector<int> s(static_cast<std::size_t>(h + 1) * sw, 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            s[(r + 1) * sw + c + 1] =
                (region.contains(r, c) ? 1 : 0) + s[r * sw + c + 1] + s[(r + 1) * sw + c] - s[r * sw + c];
    const int full = size * size;
    for (int r = 0; r + size <= h; ++r)
        for (int c = 0; c + size <= w; ++c) {
            const int n = s[(r + size) * sw + c + size] - s[r * sw + c + size] - s[(r + size) * sw + c] + s[r * sw + c];
            if (n == full) out.push_back(Roi{r, c, size, size, label});
        }
    return out;
}

std::vector<Roi> sample_rois(const PixelSet& region, int count, int size, std::uint64_t seed, RoiLabel label) {
    if (count < 0) throw ArgumentError("ROI count must be non-negative");
    if (count == 0) return {};
    std::vector<Roi> all = roi_placements(region, size, label);
    if (static_cast<int>(all.size()) < count)
        throw SamplingError("region admits " + std::to_string(all.size()) + " placements of " +
                            std::to_string(size) + "x" + std::to_string(size) + ", " + std::to_string(count) +
                            " requested");
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(count);
    return all;
}

bool roi_intersects(const Roi& roi, const PixelSet& set) {
    for (int r = roi.row; r < roi.row + roi.height; ++r)
        for (int c = roi.col; c < roi.col + roi.width; ++c)
            if (set.contains(r, c)) return true;
    return false;
}

}  // namespace oct

#include "oct/transform.hpp"

#include <algorithm>

#include <opencv2/imgproc.hpp>

#include "oct/cv_bridge.hpp"
#include "oct/error.hpp"

namespace oct {

Image resize(const Image& image, int target_height, int target_width) {
    if (target_height <= 0 || target_width <= 0) throw ArgumentError("resize target must be positive");
    if (image.empty()) throw ArgumentError("cannot resize an empty image");
    if (target_height == image.height() && target_width == image.width()) return image;
    cv::Mat out;
    cv::resize(to_mat(image), out, cv::Size(target_width, target_height), 0.0, 0.0, cv::INTER_LINEAR);
    return from_mat(out);
}

BScan resize(const BScan& scan, int target_height, int target_width) {
    Image out = resize(scan.image(), target_height, target_width);
    // Convex weights keep values inside [0,1] up to rounding.
    for (float& v : out.pixels()) v = std::clamp(v, 0.0f, 1.0f);
    return BScan(std::move(out), scan.id(), scan.kind());
}

Image min_max_scale(const Image& image) {
    Image out(image.height(), image.width());
    if (image.empty()) return out;
    const float lo = image.min();
    const float hi = image.max();
    if (!(hi > lo)) return out;
    const float range = hi - lo;
    auto src = image.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp((src[i] - lo) / range, 0.0f, 1.0f);
    return out;
}

BScan min_max_scale(const BScan& scan) {
    return BScan(min_max_scale(scan.image()), scan.id(), scan.kind());
}

Image fit_to(const Image& image, int target_height, int target_width, FitMode mode) {
    if (mode == FitMode::resize) return resize(image, target_height, target_width);
    if (image.height() > target_height || image.width() > target_width)
        throw ArgumentError("pad mode needs a target at least as large as the image");
    Image out(target_height, target_width);
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c) out(r, c) = image(r, c);
    return out;
}

Image unfit_from(const Image& fitted, int original_height, int original_width, FitMode mode) {
    if (mode == FitMode::resize) return resize(fitted, original_height, original_width);
    if (original_height > fitted.height() || original_width > fitted.width())
        throw ArgumentError("crop region exceeds the padded image");
    Image out(original_height, original_width);
    for (int r = 0; r < original_height; ++r)
        for (int c = 0; c < original_width; ++c) out(r, c) = fitted(r, c);
    return out;
}

}  // namespace oct

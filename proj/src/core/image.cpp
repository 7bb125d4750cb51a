#include "oct/image.hpp"

#include <algorithm>
#include <numeric>

#include "oct/error.hpp"

namespace oct {

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
    if (height < 0 || width < 0) throw ArgumentError("image dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(height) * width, fill);
}

Image::Image(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height < 0 || width < 0) throw ArgumentError("image dimensions must be non-negative");
    if (data_.size() != static_cast<std::size_t>(height) * width)
        throw ArgumentError("pixel buffer does not match image dimensions");
}

float Image::min() const {
    return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

float Image::max() const {
    return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

Image Image::transposed() const {
    Image out(width_, height_);
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c) out(c, r) = (*this)(r, c);
    return out;
}

const char* to_string(ImageKind kind) {
    switch (kind) {
        case ImageKind::clean: return "clean";
        case ImageKind::noisy: return "noisy";
        case ImageKind::processed: return "processed";
        case ImageKind::multiframe: return "multiframe";
    }
    return "unknown";
}

BScan::BScan(Image pixels, std::string id, ImageKind kind)
    : pixels_(std::move(pixels)), id_(std::move(id)), kind_(kind) {
    if (pixels_.height() < kMinScanSide || pixels_.width() < kMinScanSide)
        throw ArgumentError("B-scan must be at least 32x32, got " + std::to_string(pixels_.height()) +
                            "x" + std::to_string(pixels_.width()));
    for (float v : pixels_.pixels())
        if (!(v >= 0.0f && v <= 1.0f)) throw ArgumentError("B-scan intensity outside [0,1]");
}

ShadowMask::ShadowMask(Image values, bool binary) : values_(std::move(values)), binary_(binary) {
    for (float v : values_.pixels()) {
        if (!(v >= 0.0f && v <= 1.0f)) throw ArgumentError("mask value outside [0,1]");
        if (binary_ && v != 0.0f && v != 1.0f) throw ArgumentError("binary mask holds a non-{0,1} value");
    }
}

ShadowMask ShadowMask::binarize(const Image& values, float threshold) {
    Image out(values.height(), values.width());
    auto src = values.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold ? 1.0f : 0.0f;
    return ShadowMask(std::move(out), true);
}

double ShadowMask::sum() const {
    auto px = values_.pixels();
    return std::accumulate(px.begin(), px.end(), 0.0);
}

void ImagePair::validate() const {
    if (!clean.image().same_shape(mask.values()))
        throw ArgumentError("mask shape does not match clean image");
    if (noisy && !clean.image().same_shape(noisy->image()))
        throw ArgumentError("noisy image shape does not match clean image");
}

PixelSet::PixelSet(int height, int width, bool fill)
    : height_(height), width_(width), bits_(static_cast<std::size_t>(height) * width, fill ? 1 : 0) {}

std::size_t PixelSet::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

PixelSet PixelSet::intersect(const PixelSet& other) const {
    if (height_ != other.height_ || width_ != other.width_) throw ArgumentError("pixel set shape mismatch");
    PixelSet out(height_, width_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
    return out;
}

PixelSet PixelSet::minus(const PixelSet& other) const {
    if (height_ != other.height_ || width_ != other.width_) throw ArgumentError("pixel set shape mismatch");
    PixelSet out(height_, width_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & (other.bits_[i] ^ 1);
    return out;
}

PixelSet PixelSet::from_mask(const ShadowMask& mask) {
    PixelSet out(mask.height(), mask.width());
    auto v = mask.values().pixels();
    for (std::size_t i = 0; i < v.size(); ++i) out.bits_[i] = v[i] >= 0.5f ? 1 : 0;
    return out;
}

}  // namespace oct

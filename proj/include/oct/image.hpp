#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oct {

// Row-major single-channel float grid. No range constraint; noise fields and
// signed intermediates use it directly. BScan adds the domain invariants.
class Image {
public:
    Image() = default;
    Image(int height, int width, float fill = 0.0f);
    Image(int height, int width, std::vector<float> data);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float& operator()(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
    float operator()(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }

    std::span<float> pixels() { return data_; }
    std::span<const float> pixels() const { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    float min() const;
    float max() const;
    Image transposed() const;

    bool operator==(const Image& other) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

enum class ImageKind { clean, noisy, processed, multiframe };

const char* to_string(ImageKind kind);

inline constexpr int kMinScanSide = 32;

// A grayscale OCT B-scan: intensities in [0,1], both sides >= 32 pixels.
class BScan {
public:
    BScan() = default;
    BScan(Image pixels, std::string id = {}, ImageKind kind = ImageKind::clean);

    const Image& image() const { return pixels_; }
    int height() const { return pixels_.height(); }
    int width() const { return pixels_.width(); }
    const std::string& id() const { return id_; }
    ImageKind kind() const { return kind_; }

    void set_id(std::string id) { id_ = std::move(id); }
    void set_kind(ImageKind kind) { kind_ = kind; }

    bool operator==(const BScan& other) const = default;

private:
    Image pixels_;
    std::string id_;
    ImageKind kind_ = ImageKind::clean;
};

// Per-pixel shadow label or probability aligned with a BScan.
class ShadowMask {
public:
    ShadowMask() = default;
    ShadowMask(Image values, bool binary);

    // Thresholds at `threshold` (inclusive) into a binary mask.
    static ShadowMask binarize(const Image& values, float threshold = 0.5f);

    const Image& values() const { return values_; }
    bool binary() const { return binary_; }
    int height() const { return values_.height(); }
    int width() const { return values_.width(); }
    double sum() const;

    bool operator==(const ShadowMask& other) const = default;

private:
    Image values_;
    bool binary_ = true;
};

struct ImagePair {
    BScan clean;
    ShadowMask mask;
    std::optional<BScan> noisy;

    // Throws ArgumentError unless all members share the clean image's shape.
    void validate() const;

    bool operator==(const ImagePair& other) const = default;
};

// Boolean pixel membership over an image grid (layer regions, ROI supports).
class PixelSet {
public:
    PixelSet() = default;
    PixelSet(int height, int width, bool fill = false);

    int height() const { return height_; }
    int width() const { return width_; }
    bool contains(int row, int col) const {
        return row >= 0 && col >= 0 && row < height_ && col < width_ &&
               bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
    }
    void set(int row, int col, bool value = true) {
        bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
    }
    std::size_t count() const;

    PixelSet intersect(const PixelSet& other) const;
    PixelSet minus(const PixelSet& other) const;
    static PixelSet from_mask(const ShadowMask& mask);

    bool operator==(const PixelSet& other) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<unsigned char> bits_;
};

}  // namespace oct

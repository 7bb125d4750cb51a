#include "oct/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "oct/error.hpp"

namespace oct {
namespace {

cv::Mat read_gray(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open image file: " + path.string());
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (mat.empty()) throw IoError("cannot decode image file: " + path.string());
    if (mat.channels() != 1)
        throw FormatError("expected a grayscale image, got " + std::to_string(mat.channels()) +
                          " channels: " + path.string());
    return mat;
}

Image normalize(const cv::Mat& mat, const std::filesystem::path& path) {
    double scale = 0.0;
    switch (mat.depth()) {
        case CV_8U: scale = 255.0; break;
        case CV_16U: scale = 65535.0; break;
        default: throw FormatError("unsupported pixel depth (need 8 or 16 bit): " + path.string());
    }
    Image out(mat.rows, mat.cols);
    for (int r = 0; r < mat.rows; ++r) {
        for (int c = 0; c < mat.cols; ++c) {
            const double v = mat.depth() == CV_8U ? mat.at<unsigned char>(r, c) : mat.at<unsigned short>(r, c);
            out(r, c) = static_cast<float>(v / scale);
        }
    }
    return out;
}

cv::Mat quantize(const Image& image, BitDepth depth) {
    const bool wide = depth == BitDepth::u16;
    const double scale = wide ? 65535.0 : 255.0;
    cv::Mat mat(image.height(), image.width(), wide ? CV_16U : CV_8U);
    for (int r = 0; r < image.height(); ++r) {
        for (int c = 0; c < image.width(); ++c) {
            const double v = std::clamp(static_cast<double>(image(r, c)), 0.0, 1.0);
            const auto code = static_cast<int>(std::lround(v * scale));
            if (wide) mat.at<unsigned short>(r, c) = static_cast<unsigned short>(code);
            else mat.at<unsigned char>(r, c) = static_cast<unsigned char>(code);
        }
    }
    return mat;
}

}  // namespace

BScan load_image(const std::filesystem::path& path, ImageKind kind) {
    cv::Mat mat = read_gray(path);
    return BScan(normalize(mat, path), path.stem().string(), kind);
}

void save_image(const Image& image, const std::filesystem::path& path, BitDepth depth) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), quantize(image, depth)))
        throw IoError("cannot write image file: " + path.string());
}

ShadowMask load_mask(const std::filesystem::path& path) {
    cv::Mat mat = read_gray(path);
    return ShadowMask::binarize(normalize(mat, path), 0.5f);
}

void save_mask(const ShadowMask& mask, const std::filesystem::path& path) {
    save_image(ShadowMask::binarize(mask.values()).values(), path, BitDepth::u8);
}

}  // namespace oct

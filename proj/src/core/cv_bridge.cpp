#include "oct/cv_bridge.hpp"

#include <cstring>

#include "oct/error.hpp"

namespace oct {

cv::Mat to_mat(const Image& image) {
    cv::Mat mat(image.height(), image.width(), CV_32F);
    if (!image.empty()) std::memcpy(mat.ptr<float>(), image.pixels().data(), image.size() * sizeof(float));
    return mat;
}

Image from_mat(const cv::Mat& mat) {
    if (mat.channels() != 1) throw FormatError("expected a single-channel matrix");
    cv::Mat f;
    if (mat.depth() == CV_32F && mat.isContinuous()) {
        f = mat;
    } else {
        mat.convertTo(f, CV_32F);
    }
    Image out(f.rows, f.cols);
    for (int r = 0; r < f.rows; ++r) {
        const float* row = f.ptr<float>(r);
        for (int c = 0; c < f.cols; ++c) out(r, c) = row[c];
    }
    return out;
}

}  // namespace oct

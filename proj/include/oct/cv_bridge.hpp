#pragma once

#include <opencv2/core.hpp>

#include "oct/image.hpp"

namespace oct {

// Deep copies between Image and single-channel CV_32F matrices.
cv::Mat to_mat(const Image& image);
Image from_mat(const cv::Mat& mat);

}  // namespace oct

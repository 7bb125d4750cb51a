#include "oct/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "oct/cv_bridge.hpp"
#include "oct/error.hpp"

namespace oct {

void NoiseParams::validate() const {
    if (!(amplitude_low >= 0.0 && amplitude_low <= amplitude_high))
        throw ArgumentError("noise amplitudes must satisfy 0 <= low <= high");
    if (!(gaussian_sigma >= 0.0)) throw ArgumentError("noise sigma must be non-negative");
}

Image sample_noise(int height, int width, const NoiseParams& params, std::uint64_t seed) {
    params.validate();
    std::mt19937_64 rng(seed);
    double amplitude = params.amplitude_low;
    if (params.amplitude_high > params.amplitude_low)
        amplitude = std::uniform_real_distribution<double>(params.amplitude_low, params.amplitude_high)(rng);
    Image field(height, width);
    if (amplitude == 0.0) return field;
    std::normal_distribution<double> gaussian(params.gaussian_mu, params.gaussian_sigma);
    for (float& v : field.pixels()) v = static_cast<float>(amplitude * gaussian(rng));
    return field;
}

BScan add_noise(const BScan& image, const Image& field) {
    if (!image.image().same_shape(field)) throw ArgumentError("noise field shape does not match image");
    Image out = image.image();
    auto px = out.pixels();
    auto f = field.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::clamp(px[i] + f[i], 0.0f, 1.0f);
    return BScan(std::move(out), image.id(), ImageKind::noisy);
}

void AugmentParams::validate() const {
    if (rotation_degrees < 0.0 || translate_fraction < 0.0 || scale_fraction < 0.0 || scale_fraction >= 1.0)
        throw ArgumentError("augmentation ranges must be non-negative and scale range below 1");
    if (!(hflip_probability >= 0.0 && hflip_probability <= 1.0))
        throw ArgumentError("flip probability must be in [0,1]");
}

AugmentDraw draw_augmentation(const AugmentParams& params, std::mt19937_64& rng) {
    params.validate();
    auto symmetric = [&rng](double range) {
        return range > 0.0 ? std::uniform_real_distribution<double>(-range, range)(rng) : 0.0;
    };
    AugmentDraw draw;
    draw.rotation_degrees = symmetric(params.rotation_degrees);
    draw.scale = 1.0 + symmetric(params.scale_fraction);
    draw.translate_x = symmetric(params.translate_fraction);
    draw.translate_y = symmetric(params.translate_fraction);
    draw.hflip = params.hflip_probability > 0.0 && std::bernoulli_distribution(params.hflip_probability)(rng);
    return draw;
}

Image warp(const Image& image, const AugmentDraw& draw) {
    if (draw.is_identity()) return image;
    const double cx = 0.5 * (image.width() - 1);
    const double cy = 0.5 * (image.height() - 1);
    const double theta = draw.rotation_degrees * std::numbers::pi / 180.0;
    const double a = draw.scale * std::cos(theta);
    const double b = draw.scale * std::sin(theta);
    const double tx = draw.translate_x * image.width();
    const double ty = draw.translate_y * image.height();
    const double flip = draw.hflip ? -1.0 : 1.0;
    // forward map: p' = F (A (p - c) + t) + c
    cv::Matx23d m(flip * a, -flip * b, flip * (-a * cx + b * cy + tx) + cx,
                  b, a, -b * cx - a * cy + ty + cy);
    cv::Mat out;
    cv::warpAffine(to_mat(image), out, cv::Mat(m), cv::Size(image.width(), image.height()), cv::INTER_LINEAR,
                   cv::BORDER_CONSTANT, cv::Scalar(0.0));
    return from_mat(out);
}

namespace {

BScan warp_scan(const BScan& scan, const AugmentDraw& draw) {
    Image out = warp(scan.image(), draw);
    for (float& v : out.pixels()) v = std::clamp(v, 0.0f, 1.0f);
    return BScan(std::move(out), scan.id(), scan.kind());
}

}  // namespace

ImagePair apply_augmentation(const ImagePair& pair, const AugmentDraw& draw) {
    pair.validate();
    if (draw.is_identity()) return pair;
    ImagePair out;
    out.clean = warp_scan(pair.clean, draw);
    out.mask = ShadowMask::binarize(warp(pair.mask.values(), draw), 0.5f);
    if (pair.noisy) out.noisy = warp_scan(*pair.noisy, draw);
    return out;
}

ImagePair augment(const ImagePair& pair, const AugmentParams& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return apply_augmentation(pair, draw_augmentation(params, rng));
}

}  // namespace oct

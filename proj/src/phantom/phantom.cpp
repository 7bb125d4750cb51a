#include "oct/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "oct/cv_bridge.hpp"
#include "oct/error.hpp"

namespace oct {
namespace {

// Layer k spans [upper(k), lower(k)) in rows.
double layer_top(const PhantomSpec& spec, int layer, int col) {
    return layer == 0 ? -std::numeric_limits<double>::infinity() : spec.layer_boundaries[layer - 1][col];
}

double layer_bottom(const PhantomSpec& spec, int layer, int col) {
    return layer == static_cast<int>(spec.layer_boundaries.size()) ? std::numeric_limits<double>::infinity()
                                                                   : spec.layer_boundaries[layer][col];
}

Image smooth_texture(int height, int width, std::mt19937_64& rng) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    cv::Mat white(height, width, CV_32F);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) white.at<float>(r, c) = normal(rng);
    cv::Mat smooth;
    cv::GaussianBlur(white, smooth, cv::Size(0, 0), 1.5, 1.5, cv::BORDER_REFLECT);
    cv::Scalar mean, stddev;
    cv::meanStdDev(smooth, mean, stddev);
    const double sd = stddev[0] > 0.0 ? stddev[0] : 1.0;
    smooth = (smooth - mean[0]) / sd;
    return from_mat(smooth);
}

}  // namespace

void PhantomSpec::validate() const {
    if (height < kMinScanSide || width < kMinScanSide) throw ArgumentError("phantom must be at least 32x32");
    if (layer_intensities.size() != layer_boundaries.size() + 1)
        throw ArgumentError("need exactly one more layer intensity than boundaries");
    for (double v : layer_intensities)
        if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("layer intensity outside [0,1]");
    if (!(texture_amplitude >= 0.0 && texture_amplitude <= 0.2))
        throw ArgumentError("texture amplitude outside [0,0.2]");
    if (depth_deepening < 0.0) throw ArgumentError("depth deepening must be non-negative");
    for (std::size_t k = 0; k < layer_boundaries.size(); ++k) {
        const auto& b = layer_boundaries[k];
        if (static_cast<int>(b.size()) != width) throw ArgumentError("boundary must have one depth per column");
        for (int c = 0; c < width; ++c) {
            if (!(b[c] >= 0.0 && b[c] <= height)) throw ArgumentError("boundary depth outside the image");
            if (k > 0 && !(layer_boundaries[k - 1][c] < b[c]))
                throw ArgumentError("boundaries must be strictly ordered top-to-bottom at every column");
        }
    }
    for (const auto& v : vessels) {
        if (!(v.attenuation > 0.0 && v.attenuation < 1.0)) throw ArgumentError("vessel attenuation must be in (0,1)");
        if (v.half_width < 0) throw ArgumentError("vessel half width must be non-negative");
        if (v.center_column - v.half_width < 0 || v.center_column + v.half_width >= width)
            throw ArgumentError("vessel interval must lie within [0,width)");
    }
    if (!vessels.empty() && layer_boundaries.empty())
        throw ArgumentError("vessels need at least one layer boundary to cast a shadow below");
}

void to_json(nlohmann::json& j, const Vessel& v) {
    j = nlohmann::json{{"center_column", v.center_column}, {"half_width", v.half_width}, {"attenuation", v.attenuation}};
}

void from_json(const nlohmann::json& j, Vessel& v) {
    j.at("center_column").get_to(v.center_column);
    j.at("half_width").get_to(v.half_width);
    j.at("attenuation").get_to(v.attenuation);
}

void to_json(nlohmann::json& j, const PhantomSpec& spec) {
    j = nlohmann::json{{"height", spec.height},
                       {"width", spec.width},
                       {"layer_boundaries", spec.layer_boundaries},
                       {"layer_intensities", spec.layer_intensities},
                       {"texture_amplitude", spec.texture_amplitude},
                       {"vessels", spec.vessels},
                       {"depth_deepening", spec.depth_deepening}};
}

void from_json(const nlohmann::json& j, PhantomSpec& spec) {
    j.at("height").get_to(spec.height);
    j.at("width").get_to(spec.width);
    j.at("layer_boundaries").get_to(spec.layer_boundaries);
    j.at("layer_intensities").get_to(spec.layer_intensities);
    j.at("texture_amplitude").get_to(spec.texture_amplitude);
    j.at("vessels").get_to(spec.vessels);
    spec.depth_deepening = j.value("depth_deepening", 0.0);
}

AttenuationMap AttenuationMap::from_spec(const PhantomSpec& spec) {
    spec.validate();
    Image factors(spec.height, spec.width, 1.0f);
    for (const auto& v : spec.vessels) {
        for (int c = v.center_column - v.half_width; c <= v.center_column + v.half_width; ++c) {
            const double top = spec.layer_boundaries.front()[c];
            for (int r = 0; r < spec.height; ++r) {
                if (r < top) continue;
                double a = v.attenuation;
                if (spec.depth_deepening > 0.0)
                    a *= std::max(0.0, 1.0 - spec.depth_deepening * (r - top) / spec.height);
                factors(r, c) = static_cast<float>(factors(r, c) * a);
            }
        }
    }
    return AttenuationMap(std::move(factors));
}

AttenuationMap AttenuationMap::uniform(const ShadowMask& mask, double attenuation) {
    Image factors(mask.height(), mask.width(), 1.0f);
    auto m = mask.values().pixels();
    auto f = factors.pixels();
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i] >= 0.5f) f[i] = static_cast<float>(attenuation);
    return AttenuationMap(std::move(factors));
}

PhantomSpec random_phantom_spec(int height, int width, std::mt19937_64& rng, double texture_amplitude) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PhantomSpec spec;
    spec.height = height;
    spec.width = width;
    spec.texture_amplitude = texture_amplitude;

    // vitreous, RNFL, inner retina, photoreceptors, RPE, choroid
    spec.layer_intensities = {0.0,
                              0.70 + 0.10 * unit(rng),
                              0.35 + 0.10 * unit(rng),
                              0.55 + 0.10 * unit(rng),
                              1.0,
                              0.25 + 0.10 * unit(rng)};
    const double undulation = 0.04 * height * unit(rng);
    const double frequency = 0.5 + unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    // The 20-row background strip at the top must stay clear of tissue.
    const double first = std::max(0.26 * height, 22.0) + undulation + 0.03 * height * unit(rng);
    const double remaining = height - first - undulation - 1.0;
    const std::vector<double> fractions = {0.17, 0.20, 0.15, 0.13};
    double depth = first;
    std::vector<double> bases = {first};
    for (double f : fractions) {
        depth += f * remaining;
        bases.push_back(depth);
    }
    for (double base : bases) {
        const double wobble = 0.3 * unit(rng);
        std::vector<double> boundary(width);
        for (int c = 0; c < width; ++c) {
            const double t = static_cast<double>(c) / width;
            boundary[c] = base + undulation * std::sin(2.0 * std::numbers::pi * frequency * t + phase) +
                          wobble * std::sin(6.0 * std::numbers::pi * t);
        }
        spec.layer_boundaries.push_back(std::move(boundary));
    }

    const int min_hw = std::max(2, width / 64);
    const int max_hw = std::max(3, width / 24);
    std::uniform_int_distribution<int> vessel_count(1, 3);
    std::uniform_int_distribution<int> half_width(min_hw, max_hw);
    std::uniform_real_distribution<double> attenuation(0.3, 0.7);
    const int wanted = vessel_count(rng);
    const int margin = 4;
    for (int attempt = 0; attempt < 200 && static_cast<int>(spec.vessels.size()) < wanted; ++attempt) {
        Vessel v;
        v.half_width = half_width(rng);
        std::uniform_int_distribution<int> center(margin + v.half_width, width - 1 - margin - v.half_width);
        v.center_column = center(rng);
        v.attenuation = attenuation(rng);
        const bool clear = std::none_of(spec.vessels.begin(), spec.vessels.end(), [&](const Vessel& o) {
            return std::abs(o.center_column - v.center_column) < 2 * (o.half_width + v.half_width) + margin;
        });
        if (clear) spec.vessels.push_back(v);
    }
    spec.validate();
    return spec;
}

PhantomSpec flat_phantom_spec(int height, int width, const std::vector<double>& boundary_rows,
                              const std::vector<double>& intensities, std::vector<Vessel> vessels,
                              double texture_amplitude) {
    PhantomSpec spec;
    spec.height = height;
    spec.width = width;
    for (double row : boundary_rows) spec.layer_boundaries.emplace_back(width, row);
    spec.layer_intensities = intensities;
    spec.vessels = std::move(vessels);
    spec.texture_amplitude = texture_amplitude;
    spec.validate();
    return spec;
}

ImagePair generate_phantom(const PhantomSpec& spec, std::uint64_t seed, const std::string& id) {
    spec.validate();
    std::mt19937_64 rng(seed);
    Image clean(spec.height, spec.width);
    for (int layer = 0; layer < spec.layer_count(); ++layer) {
        for (int c = 0; c < spec.width; ++c) {
            const double top = layer_top(spec, layer, c);
            const double bottom = layer_bottom(spec, layer, c);
            for (int r = 0; r < spec.height; ++r)
                if (r >= top && r < bottom) clean(r, c) = static_cast<float>(spec.layer_intensities[layer]);
        }
    }
    if (spec.texture_amplitude > 0.0) {
        const Image texture = smooth_texture(spec.height, spec.width, rng);
        auto px = clean.pixels();
        auto tx = texture.pixels();
        for (std::size_t i = 0; i < px.size(); ++i)
            px[i] = std::clamp(px[i] + static_cast<float>(spec.texture_amplitude) * tx[i], 0.0f, 1.0f);
    }

    Image mask(spec.height, spec.width);
    for (const auto& v : spec.vessels) {
        for (int c = v.center_column - v.half_width; c <= v.center_column + v.half_width; ++c) {
            const double top = spec.layer_boundaries.front()[c];
            for (int r = 0; r < spec.height; ++r)
                if (r >= top) mask(r, c) = 1.0f;
        }
    }
    ImagePair pair{BScan(std::move(clean), id, ImageKind::clean), ShadowMask(std::move(mask), true), std::nullopt};
    return pair;
}

BScan apply_shadow(const BScan& clean, const ShadowMask& mask, const AttenuationMap& attenuation) {
    if (!clean.image().same_shape(mask.values()) || !clean.image().same_shape(attenuation.factors()))
        throw ArgumentError("apply_shadow: image, mask and attenuation shapes differ");
    if (!mask.binary()) throw ArgumentError("apply_shadow needs a binary mask");
    Image out = clean.image();
    auto px = out.pixels();
    auto m = mask.values().pixels();
    auto f = attenuation.factors().pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        if (m[i] == 1.0f) px[i] = std::clamp(px[i] * f[i], 0.0f, 1.0f);
    return BScan(std::move(out), clean.id(), ImageKind::multiframe);
}

PixelSet layer_region(const PhantomSpec& spec, int layer_index) {
    if (layer_index < 0 || layer_index >= spec.layer_count())
        throw ArgumentError("layer index " + std::to_string(layer_index) + " out of range");
    PixelSet region(spec.height, spec.width);
    for (int c = 0; c < spec.width; ++c) {
        const double top = layer_top(spec, layer_index, c);
        const double bottom = layer_bottom(spec, layer_index, c);
        for (int r = 0; r < spec.height; ++r)
            if (r >= top && r < bottom) region.set(r, c);
    }
    return region;
}

std::vector<int> layer_center_path(const PhantomSpec& spec, int layer_index) {
    if (layer_index < 0 || layer_index >= spec.layer_count())
        throw ArgumentError("layer index " + std::to_string(layer_index) + " out of range");
    std::vector<int> path(spec.width);
    for (int c = 0; c < spec.width; ++c) {
        const double top = std::max(0.0, layer_top(spec, layer_index, c));
        const double bottom = std::min(static_cast<double>(spec.height), layer_bottom(spec, layer_index, c));
        path[c] = std::clamp(static_cast<int>(std::floor(0.5 * (top + bottom))), 0, spec.height - 1);
    }
    return path;
}

}  // namespace oct

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oct/image.hpp"

namespace oct {

struct Vessel {
    int center_column = 0;
    int half_width = 0;
    double attenuation = 0.5;  // fraction of signal surviving under the vessel, in (0,1)

    bool operator==(const Vessel&) const = default;
};

// A synthetic layered retina. Boundary k holds one depth (row, fractional) per
// column; layer k spans boundary k-1 (or the top edge) to boundary k (or the
// bottom edge), so there is one more layer than boundaries.
struct PhantomSpec {
    int height = 128;
    int width = 128;
    std::vector<std::vector<double>> layer_boundaries;
    std::vector<double> layer_intensities;
    double texture_amplitude = 0.05;
    std::vector<Vessel> vessels;
    // 0 keeps attenuation constant with depth; kappa > 0 deepens the shadow
    // linearly: a(row) = a * max(0, 1 - kappa * (row - top) / height).
    double depth_deepening = 0.0;

    int layer_count() const { return static_cast<int>(layer_intensities.size()); }

    // Throws ArgumentError on any violated invariant.
    void validate() const;

    bool operator==(const PhantomSpec&) const = default;
};

void to_json(nlohmann::json& j, const Vessel& v);
void from_json(const nlohmann::json& j, Vessel& v);
void to_json(nlohmann::json& j, const PhantomSpec& spec);
void from_json(const nlohmann::json& j, PhantomSpec& spec);

// Per-pixel multiplicative attenuation implied by a spec (1 outside shadows).
class AttenuationMap {
public:
    AttenuationMap() = default;
    explicit AttenuationMap(Image factors) : factors_(std::move(factors)) {}

    static AttenuationMap from_spec(const PhantomSpec& spec);
    // Uniform attenuation under every masked pixel.
    static AttenuationMap uniform(const ShadowMask& mask, double attenuation);

    const Image& factors() const { return factors_; }

private:
    Image factors_;
};

// Layer geometry and intensities tuned for the given size; vessels and
// boundary undulation are drawn from `rng`.
PhantomSpec random_phantom_spec(int height, int width, std::mt19937_64& rng, double texture_amplitude = 0.05);

// Flat-layer spec with explicit boundaries/vessels; used by tests and
// calibration targets.
PhantomSpec flat_phantom_spec(int height, int width, const std::vector<double>& boundary_rows,
                              const std::vector<double>& intensities, std::vector<Vessel> vessels,
                              double texture_amplitude = 0.0);

// Shadow-free clean image plus the exact vessel-shadow mask.
ImagePair generate_phantom(const PhantomSpec& spec, std::uint64_t seed, const std::string& id = "phantom");

// output = clean * a(p) on masked pixels, clean elsewhere.
BScan apply_shadow(const BScan& clean, const ShadowMask& mask, const AttenuationMap& attenuation);

// Pixels between boundary layer_index-1 and boundary layer_index.
PixelSet layer_region(const PhantomSpec& spec, int layer_index);

// Row index of the band centre of a layer at every column.
std::vector<int> layer_center_path(const PhantomSpec& spec, int layer_index);

}  // namespace oct

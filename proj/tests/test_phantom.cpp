#include <doctest.h>

#include <cmath>

#include "oct/error.hpp"
#include "oct/metrics.hpp"
#include "oct/phantom.hpp"
#include "test_support.hpp"

using namespace oct;

namespace {

PhantomSpec two_layer(std::vector<Vessel> vessels, double amp = 0.0) {
    return flat_phantom_spec(64, 64, {10.0, 20.0}, {0.0, 0.8, 0.4}, std::move(vessels), amp);
}

}  // namespace

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(flat_phantom_spec(64, 64, {20.0, 10.0}, {0.0, 0.5, 0.5}, {}), ArgumentError);
    CHECK_THROWS_AS(flat_phantom_spec(64, 64, {10.0}, {0.0, 0.5, 0.5}, {}), ArgumentError);
    CHECK_THROWS_AS(flat_phantom_spec(64, 64, {10.0}, {0.0, 0.5}, {{60, 5, 0.5}}), ArgumentError);
    CHECK_THROWS_AS(flat_phantom_spec(64, 64, {10.0}, {0.0, 0.5}, {{30, 2, 1.0}}), ArgumentError);
    CHECK_THROWS_AS(flat_phantom_spec(64, 64, {10.0}, {0.0, 0.5}, {}, 0.3), ArgumentError);
}

TEST_CASE("generate_phantom masks") {
    SUBCASE("no vessels, no mask") {
        const ImagePair p = generate_phantom(two_layer({}), 1);
        CHECK(p.mask.sum() == 0.0);
    }
    SUBCASE("one vessel covers its interval below the first boundary") {
        const PhantomSpec spec = flat_phantom_spec(64, 64, {10.0, 20.0}, {0.0, 0.8, 0.4}, {{50, 5, 0.5}});
        const ImagePair p = generate_phantom(spec, 1);
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c) {
                const bool inside = c >= 45 && c <= 55 && r >= 10;
                CHECK(p.mask.values()(r, c) == (inside ? 1.0f : 0.0f));
            }
    }
    SUBCASE("column sums only inside declared intervals") {
        std::mt19937_64 rng(7);
        for (int k = 0; k < 10; ++k) {
            const PhantomSpec spec = random_phantom_spec(128, 128, rng);
            const ImagePair p = generate_phantom(spec, static_cast<std::uint64_t>(k));
            for (int c = 0; c < 128; ++c) {
                double col = 0.0;
                for (int r = 0; r < 128; ++r) col += p.mask.values()(r, c);
                bool declared = false;
                for (const auto& v : spec.vessels)
                    declared = declared || (c >= v.center_column - v.half_width && c <= v.center_column + v.half_width);
                if (!declared) CHECK(col == 0.0);
                else CHECK(col > 0.0);
            }
        }
    }
}

TEST_CASE("generate_phantom is deterministic and in range") {
    std::mt19937_64 rng(3);
    const PhantomSpec spec = random_phantom_spec(96, 64, rng, 0.2);
    const ImagePair a = generate_phantom(spec, 11);
    const ImagePair b = generate_phantom(spec, 11);
    CHECK(a == b);
    CHECK(a.clean.image().min() >= 0.0f);
    CHECK(a.clean.image().max() <= 1.0f);
    CHECK_FALSE(generate_phantom(spec, 12).clean.image() == a.clean.image());
}

TEST_CASE("flat layers without texture are piecewise constant") {
    const ImagePair p = generate_phantom(two_layer({}), 0);
    CHECK(p.clean.image()(5, 7) == 0.0f);
    CHECK(p.clean.image()(10, 7) == 0.8f);
    CHECK(p.clean.image()(19, 7) == 0.8f);
    CHECK(p.clean.image()(20, 7) == 0.4f);
}

TEST_CASE("apply_shadow") {
    const PhantomSpec spec = two_layer({{30, 3, 0.5}});
    const ImagePair p = generate_phantom(spec, 0);
    SUBCASE("attenuation 1 is identity") {
        const BScan out = apply_shadow(p.clean, p.mask, AttenuationMap::uniform(p.mask, 1.0));
        CHECK(out.image() == p.clean.image());
        CHECK(out.kind() == ImageKind::multiframe);
    }
    SUBCASE("multiplies inside, keeps outside") {
        const BScan out = apply_shadow(p.clean, p.mask, AttenuationMap::from_spec(spec));
        CHECK(out.image()(15, 30) == doctest::Approx(0.4));
        CHECK(out.image()(15, 10) == 0.8f);
        CHECK(out.image()(40, 33) == doctest::Approx(0.2));
        CHECK(out.image()(40, 34) == 0.4f);
    }
    SUBCASE("shape mismatch") {
        const ImagePair other = generate_phantom(flat_phantom_spec(32, 32, {10.0}, {0.0, 0.5}, {}), 0);
        CHECK_THROWS_AS(apply_shadow(p.clean, other.mask, AttenuationMap::uniform(other.mask, 0.5)), ArgumentError);
    }
    SUBCASE("depth deepening strengthens the shadow with depth") {
        PhantomSpec deep = spec;
        deep.depth_deepening = 1.0;
        const BScan out = apply_shadow(p.clean, p.mask, AttenuationMap::from_spec(deep));
        // a(r) = 0.5 * (1 - (r - 10) / 64)
        CHECK(out.image()(42, 30) == doctest::Approx(0.4 * 0.5 * (1.0 - 32.0 / 64.0)).epsilon(1e-6));
    }
}

TEST_CASE("layer_region") {
    const PhantomSpec spec = two_layer({});
    const PixelSet top = layer_region(spec, 0);
    CHECK(top.count() == 10u * 64u);
    CHECK(top.contains(9, 0));
    CHECK_FALSE(top.contains(10, 0));
    const PixelSet mid = layer_region(spec, 1);
    CHECK(mid.count() == 10u * 64u);
    for (int r = 0; r < 64; ++r) CHECK(mid.contains(r, 17) == (r >= 10 && r <= 19));
    CHECK_THROWS_AS(layer_region(spec, 3), ArgumentError);
    CHECK_THROWS_AS(layer_region(spec, -1), ArgumentError);

    std::mt19937_64 rng(5);
    const PhantomSpec curved = random_phantom_spec(128, 96, rng);
    std::vector<int> hits(128 * 96, 0);
    for (int k = 0; k < curved.layer_count(); ++k) {
        const PixelSet s = layer_region(curved, k);
        for (int r = 0; r < 128; ++r)
            for (int c = 0; c < 96; ++c) hits[r * 96 + c] += s.contains(r, c);
    }
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("phantom ILC ground truth at zero texture") {
    for (double a : {0.3, 0.5, 0.7}) {
        const PhantomSpec spec = flat_phantom_spec(64, 64, {22.0, 40.0}, {0.0, 0.8, 0.4}, {{32, 4, a}});
        const ImagePair p = generate_phantom(spec, 0);
        const BScan shadowed = apply_shadow(p.clean, p.mask, AttenuationMap::from_spec(spec));
        const PixelSet region = layer_region(spec, 1);
        const PixelSet shadow = PixelSet::from_mask(p.mask);
        const auto free = sample_rois(region.minus(shadow), 5, 5, 1, RoiLabel::shadow_free);
        const auto dark = sample_rois(region.intersect(shadow), 5, 5, 2, RoiLabel::shadowed);
        CHECK(ilc(shadowed.image(), free, dark) == doctest::Approx((1.0 - a) / (1.0 + a)).epsilon(1e-6));
    }
}

TEST_CASE("spec json round trip") {
    std::mt19937_64 rng(9);
    PhantomSpec spec = random_phantom_spec(64, 64, rng);
    spec.depth_deepening = 0.25;
    const PhantomSpec back = nlohmann::json(spec).get<PhantomSpec>();
    CHECK(back == spec);
}

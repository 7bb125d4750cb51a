#include <doctest.h>

#include <cmath>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "oct/cv_bridge.hpp"
#include "oct/error.hpp"
#include "oct/io.hpp"
#include "oct/seed.hpp"
#include "oct/transform.hpp"
#include "test_support.hpp"

using namespace oct;

TEST_CASE("bscan invariants") {
    CHECK_NOTHROW(BScan(Image(32, 32, 0.5f)));
    CHECK_THROWS_AS(BScan(Image(31, 32, 0.5f)), ArgumentError);
    CHECK_THROWS_AS(BScan(Image(32, 32, 1.5f)), ArgumentError);
    CHECK_THROWS_AS(BScan(Image(32, 32, -0.1f)), ArgumentError);
    CHECK_THROWS_AS(ShadowMask(Image(4, 4, 0.5f), true), ArgumentError);
    CHECK_NOTHROW(ShadowMask(Image(4, 4, 0.5f), false));
    ImagePair p{BScan(Image(32, 32)), ShadowMask(Image(32, 33), true), std::nullopt};
    CHECK_THROWS_AS(p.validate(), ArgumentError);
}

TEST_CASE("load_image maps codes to [0,1]") {
    const auto dir = test::scratch("core_io");
    cv::Mat m(32, 32, CV_8U, cv::Scalar(255));
    cv::imwrite((dir / "white.png").string(), m);
    m.setTo(0);
    m.at<unsigned char>(3, 4) = 128;
    cv::imwrite((dir / "dark.png").string(), m);
    const BScan white = load_image(dir / "white.png");
    for (float v : white.image().pixels()) CHECK(v == 1.0f);
    CHECK(white.id() == "white");
    const BScan dark = load_image(dir / "dark.png");
    CHECK(dark.image()(0, 0) == 0.0f);
    CHECK(dark.image()(3, 4) == doctest::Approx(128.0 / 255.0).epsilon(1e-7));

    cv::Mat wide(32, 32, CV_16U, cv::Scalar(65535));
    cv::imwrite((dir / "wide.png").string(), wide);
    CHECK(load_image(dir / "wide.png").image()(5, 5) == 1.0f);

    cv::Mat colour(32, 32, CV_8UC3, cv::Scalar(1, 2, 3));
    cv::imwrite((dir / "colour.png").string(), colour);
    CHECK_THROWS_AS(load_image(dir / "colour.png"), FormatError);
    CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
    std::ofstream(dir / "junk.png") << "not an image";
    CHECK_THROWS_AS(load_image(dir / "junk.png"), IoError);
}

TEST_CASE("8-bit load/save/load is bit exact") {
    const auto dir = test::scratch("core_roundtrip");
    cv::Mat m(40, 36, CV_8U);
    cv::randu(m, 0, 256);
    cv::imwrite((dir / "a.png").string(), m);
    const BScan a = load_image(dir / "a.png");
    save_image(a, dir / "b.png");
    const BScan b = load_image(dir / "b.png");
    CHECK(a.image() == b.image());
    cv::Mat back = cv::imread((dir / "b.png").string(), cv::IMREAD_UNCHANGED);
    CHECK(cv::countNonZero(back != m) == 0);
}

TEST_CASE("mask io keeps binary values") {
    const auto dir = test::scratch("core_mask");
    Image v(32, 32);
    v(2, 3) = 1.0f;
    save_mask(ShadowMask(v, true), dir / "m.png");
    const ShadowMask m = load_mask(dir / "m.png");
    CHECK(m.binary());
    CHECK(m.values() == v);
}

TEST_CASE("resize") {
    SUBCASE("constant stays constant") {
        const Image out = resize(Image(32, 32, 0.7f), 50, 41);
        for (float v : out.pixels()) CHECK(v == doctest::Approx(0.7f).epsilon(1e-6));
    }
    SUBCASE("2x2 ramp to 2x4") {
        // pixel-centre aligned: source x = 0.5 * x - 0.25, clamped at the edges
        Image in(2, 2);
        in(0, 1) = in(1, 1) = 1.0f;
        const Image out = resize(in, 2, 4);
        const float expect[] = {0.0f, 0.25f, 0.75f, 1.0f};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 4; ++c) CHECK(out(r, c) == doctest::Approx(expect[c]).epsilon(1e-6));
    }
    SUBCASE("identity is bit exact") {
        const Image in = test::random_image(33, 35, 1);
        CHECK(resize(in, 33, 35) == in);
    }
    SUBCASE("value envelope") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Image in = test::random_image(37, 45, seed, 0.2f, 0.8f);
            const Image out = resize(in, 64 + static_cast<int>(seed) * 7, 30 + static_cast<int>(seed) * 11);
            CHECK(out.min() >= in.min() - 1e-6f);
            CHECK(out.max() <= in.max() + 1e-6f);
        }
    }
    CHECK_THROWS_AS(resize(Image(4, 4), 0, 4), ArgumentError);
    CHECK_THROWS_AS(resize(Image(4, 4), 4, -1), ArgumentError);
}

TEST_CASE("min_max_scale") {
    Image in(1, 3);
    in(0, 0) = 0.2f;
    in(0, 1) = 0.4f;
    in(0, 2) = 0.6f;
    const Image out = min_max_scale(in);
    CHECK(out(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(out.min() == 0.0f);
    CHECK(out.max() == 1.0f);
    Image full(1, 3);
    full(0, 0) = 0.0f;
    full(0, 1) = 0.25f;
    full(0, 2) = 1.0f;
    CHECK(min_max_scale(full) == full);
    const Image flat = min_max_scale(Image(4, 4, 0.3f));
    for (float v : flat.pixels()) CHECK(v == 0.0f);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image once = min_max_scale(test::random_image(16, 16, seed));
        CHECK(min_max_scale(once) == once);
    }
}

TEST_CASE("fit_to / unfit_from") {
    const Image in = test::random_image(40, 36, 3);
    const Image padded = fit_to(in, 48, 48, FitMode::pad);
    CHECK(padded.height() == 48);
    CHECK(padded(45, 45) == 0.0f);
    CHECK(unfit_from(padded, 40, 36, FitMode::pad) == in);
    CHECK_THROWS_AS(fit_to(in, 32, 48, FitMode::pad), ArgumentError);
    const Image r = fit_to(in, 48, 48, FitMode::resize);
    CHECK(unfit_from(r, 40, 36, FitMode::resize).height() == 40);
}

TEST_CASE("cv bridge round trip") {
    const Image in = test::random_image(9, 7, 4);
    const cv::Mat m = to_mat(in);
    CHECK(m.type() == CV_32F);
    CHECK(from_mat(m) == in);
}

TEST_CASE("pixel sets") {
    PixelSet a(4, 4), b(4, 4);
    a.set(1, 1);
    a.set(2, 2);
    b.set(2, 2);
    CHECK(a.count() == 2);
    CHECK(a.intersect(b).count() == 1);
    CHECK(a.minus(b).count() == 1);
    CHECK(a.minus(b).contains(1, 1));
    CHECK_FALSE(a.contains(-1, 0));
}

TEST_CASE("seed derivation") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(derive_seed(1, "x", 0) == derive_seed(1, "x", 0));
    CHECK(derive_seed(1, "x", 0) != derive_seed(1, "x", 1));
    CHECK(derive_seed(1, "x", 0) != derive_seed(1, "y", 0));
    CHECK(derive_seed(1, "x", 0, 0) != derive_seed(1, "x", 0, 1));
    CHECK(derive_seed(1, "x", 0) != derive_seed(2, "x", 0));
}

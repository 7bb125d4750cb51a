#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "oct/error.hpp"
#include "oct/extractor.hpp"
#include "oct/losses.hpp"
#include "test_support.hpp"

using namespace oct;

namespace {

Tensor<double> filled(int c, int h, int w, std::vector<double> values) {
    Tensor<double> t(c, h, w);
    t.data.assign(values.begin(), values.end());
    return t;
}

Tensor<double> random_tensor(int c, int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor<double> t(c, h, w);
    for (auto& v : t.data) v = u(rng);
    return t;
}

// Naive oracle: per tap, G[a][b] = sum_p F[a][p] F[b][p].
double naive_style(const std::vector<Tensor<double>>& d, const std::vector<Tensor<double>>& c) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int ch = d[i].channels;
        const std::size_t n = d[i].plane();
        for (int a = 0; a < ch; ++a)
            for (int b = 0; b < ch; ++b) {
                double gd = 0.0, gc = 0.0;
                for (std::size_t p = 0; p < n; ++p) {
                    gd += d[i].data[a * n + p] * d[i].data[b * n + p];
                    gc += c[i].data[a * n + p] * c[i].data[b * n + p];
                }
                total += (gd - gc) * (gd - gc);
            }
    }
    return total;
}

double naive_content(const std::vector<Tensor<double>>& d, const std::vector<Tensor<double>>& c) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < d[i].data.size(); ++k) s += (d[i].data[k] - c[i].data[k]) * (d[i].data[k] - c[i].data[k]);
        total += s / static_cast<double>(d[i].data.size());
    }
    return total;
}

ShadowMask mask_from(int h, int w, const std::vector<std::pair<int, int>>& ones) {
    Image m(h, w);
    for (auto [r, c] : ones) m(r, c) = 1.0f;
    return ShadowMask(m, true);
}

}  // namespace

TEST_CASE("content loss worked examples") {
    const std::vector<Tensor<double>> d{filled(1, 2, 2, {1, 1, 1, 1})};
    const std::vector<Tensor<double>> c{Tensor<double>(1, 2, 2)};
    CHECK(content_loss<double>(d, c) == doctest::Approx(1.0));
    CHECK(content_loss<double>(d, d) == 0.0);
    const std::vector<Tensor<double>> c2{filled(1, 2, 2, {0, 0, 0, 4})};
    CHECK(content_loss<double>(d, c2) == doctest::Approx(3.0));
    const std::vector<Tensor<double>> wrong{Tensor<double>(1, 2, 3)};
    CHECK_THROWS_AS(content_loss<double>(d, wrong), ArgumentError);
}

TEST_CASE("gram and style loss worked examples") {
    const Tensor<double> f = filled(1, 2, 2, {1, 2, 3, 4});
    const auto g = gram(f);
    REQUIRE(g.rows() == 1);
    CHECK(g(0, 0) == 30.0);
    const std::vector<Tensor<double>> d{f};
    const std::vector<Tensor<double>> zero{Tensor<double>(1, 2, 2)};
    CHECK(style_loss<double>(d, zero) == doctest::Approx(900.0));
    CHECK(style_loss<double>(d, d) == 0.0);

    const Tensor<double> two = filled(2, 1, 2, {1, 2, 3, 4});
    const auto g2 = gram(two);
    CHECK(g2(0, 0) == 5.0);
    CHECK(g2(0, 1) == 11.0);
    CHECK(g2(1, 0) == 11.0);
    CHECK(g2(1, 1) == 25.0);
}

TEST_CASE("losses agree with naive oracles on random features") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        std::vector<Tensor<double>> d, c;
        for (int tap = 0; tap < 3; ++tap) {
            const int ch = 1 + static_cast<int>((s + tap) % 4);
            d.push_back(random_tensor(ch, 3 + tap, 4, s * 10 + tap));
            c.push_back(random_tensor(ch, 3 + tap, 4, s * 10 + tap + 5));
        }
        CHECK(test::rel_err(content_loss<double>(d, c), naive_content(d, c)) < 1e-12);
        CHECK(test::rel_err(style_loss<double>(d, c), naive_style(d, c)) < 1e-12);
        CHECK(test::rel_err(style_loss<double>(d, c), style_loss<double>(c, d)) < 1e-12);
        CHECK(test::rel_err(content_loss<double>(d, c), content_loss<double>(c, d)) < 1e-12);
        const auto g = gram(d[0]);
        CHECK((g - g.transpose()).norm() <= 1e-12 * g.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("content loss is additive over taps") {
    const std::vector<Tensor<double>> a{random_tensor(2, 3, 3, 1)}, b{random_tensor(3, 2, 2, 2)};
    const std::vector<Tensor<double>> ac{random_tensor(2, 3, 3, 3)}, bc{random_tensor(3, 2, 2, 4)};
    const std::vector<Tensor<double>> both{a[0], b[0]}, both_c{ac[0], bc[0]};
    CHECK(content_loss<double>(both, both_c) ==
          doctest::Approx(content_loss<double>(a, ac) + content_loss<double>(b, bc)).epsilon(1e-12));
    CHECK(style_loss<double>(both, both_c) ==
          doctest::Approx(style_loss<double>(a, ac) + style_loss<double>(b, bc)).epsilon(1e-12));
}

TEST_CASE("analytic feature gradients match finite differences") {
    std::vector<Tensor<double>> d{random_tensor(2, 3, 3, 5), random_tensor(3, 2, 2, 6)};
    const std::vector<Tensor<double>> c{random_tensor(2, 3, 3, 7), random_tensor(3, 2, 2, 8)};
    std::vector<Tensor<double>> gc, gs;
    content_loss<double>(d, c, &gc);
    style_loss<double>(d, c, &gs);
    const double h = 1e-6;
    for (std::size_t t = 0; t < d.size(); ++t) {
        for (std::size_t i = 0; i < d[t].data.size(); ++i) {
            const double keep = d[t].data[i];
            d[t].data[i] = keep + h;
            const double cp = content_loss<double>(d, c), sp = style_loss<double>(d, c);
            d[t].data[i] = keep - h;
            const double cm = content_loss<double>(d, c), sm = style_loss<double>(d, c);
            d[t].data[i] = keep;
            CHECK(test::rel_err((cp - cm) / (2 * h), gc[t].data[i]) < 1e-5);
            CHECK(test::rel_err((sp - sm) / (2 * h), gs[t].data[i]) < 1e-5);
        }
    }
}

TEST_CASE("end-to-end gradient through the toy extractor") {
    const FeatureExtractor<double> ex(FeatureExtractorSpec::named("toy"));
    const Tensor<double> target = to_tensor<double>(test::random_image(4, 4, 9));
    const auto target_feats = ex.extract(target);
    Tensor<double> x = to_tensor<double>(test::random_image(4, 4, 10));
    const double k = 0.3;
    auto loss = [&](const Tensor<double>& img) {
        const auto f = ex.extract(img);
        return content_loss<double>(f, target_feats) + k * style_loss<double>(f, target_feats);
    };
    Graph<double> g;
    const auto in = g.input(x, true);
    const auto taps = ex.features(g, in);
    std::vector<Tensor<double>> feats;
    for (auto t : taps) feats.push_back(g.value(t));
    std::vector<Tensor<double>> gc, gs;
    content_loss<double>(feats, target_feats, &gc);
    style_loss<double>(feats, target_feats, &gs);
    std::vector<std::pair<int, Tensor<double>>> seeds;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        Tensor<double> s = gc[i];
        for (std::size_t j = 0; j < s.data.size(); ++j) s.data[j] += k * gs[i].data[j];
        seeds.emplace_back(taps[i], s);
    }
    g.backward(seeds);
    const double step = 1e-4;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        Tensor<double> xp = x, xm = x;
        xp.data[i] += step;
        xm.data[i] -= step;
        const double numeric = (loss(xp) - loss(xm)) / (2 * step);
        const double analytic = g.grad(in).data[i];
        CHECK(std::abs(numeric - analytic) <= 1e-3 * std::max(std::abs(numeric), 1e-3));
    }
}

TEST_CASE("shadow loss") {
    Image pred(2, 2);
    pred.pixels()[0] = 0.5f;
    pred.pixels()[1] = 1.0f;
    pred.pixels()[2] = 1.0f;
    const ShadowMask gt = mask_from(2, 2, {{1, 0}, {1, 1}});
    CHECK(shadow_loss(ShadowMask(pred, false), gt) == doctest::Approx(1.25));
    CHECK(shadow_loss(gt, gt) == 1.0);
    Image five(2, 2, 0.625f);
    CHECK(shadow_loss(ShadowMask(five, false), gt) == doctest::Approx(1.25));
    Image wide(4, 4, 0.625f);
    const ShadowMask gt_wide = mask_from(4, 4, {{0, 0}, {0, 1}});
    CHECK(shadow_loss(ShadowMask(wide, false), gt_wide) == doctest::Approx(5.0));
    CHECK_THROWS_AS(shadow_loss(gt, ShadowMask(Image(2, 2), true)), DegenerateError);
    CHECK_THROWS_AS(shadow_loss(gt_wide, gt), ArgumentError);

    Tensor<double> tp = to_tensor<double>(wide);
    Tensor<double> grad;
    CHECK(shadow_loss<double>(tp, to_tensor<double>(gt_wide.values()), &grad) == doctest::Approx(5.0));
    for (double v : grad.data) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("total loss") {
    LossWeights w;
    w.content = {1.0, 2.0, 3.0};
    w.style = {0.1, 0.2, 0.3};
    const std::vector<double> c{1.0, 2.0, 3.0}, s{1.0, 1.0, 1.0};
    CHECK(total_loss(c, s, 0.5, w) == doctest::Approx(1 + 4 + 9 + 0.6 + 0.5));
    LossWeights unit;
    unit.content = {1.0};
    unit.style = {1.0};
    const std::vector<double> c1{0.2}, s1{0.3};
    CHECK(total_loss(c1, s1, 0.2, unit) == doctest::Approx(0.7));
    CHECK_THROWS_AS(total_loss(c1, s, 0.0, unit), ConfigError);
    CHECK_THROWS_AS(total_loss(c, s, 0.0, unit), ConfigError);
    // default weights are the published ones and validate
    LossWeights defaults;
    CHECK_NOTHROW(defaults.validate());
    CHECK(defaults.content == std::vector<double>{2.86, 4.0, 6.67});
    LossWeights bad = defaults;
    bad.style[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("mask_out_shadows") {
    const BScan img(test::random_image(32, 32, 11, 0.1f, 1.0f));
    SUBCASE("empty mask is identity") {
        CHECK(mask_out_shadows(img, ShadowMask(Image(32, 32), true)).image() == img.image());
    }
    SUBCASE("full mask zeroes everything") {
        const BScan out = mask_out_shadows(img, ShadowMask(Image(32, 32, 1.0f), true));
        for (float v : out.image().pixels()) CHECK(v == 0.0f);
    }
    SUBCASE("column mask") {
        std::vector<std::pair<int, int>> ones;
        for (int r = 5; r < 32; ++r) ones.emplace_back(r, 7);
        const BScan out = mask_out_shadows(img, mask_from(32, 32, ones));
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c) {
                if (c == 7 && r >= 5) CHECK(out.image()(r, c) == 0.0f);
                else CHECK(out.image()(r, c) == img.image()(r, c));
            }
        const auto keep = shadow_keep_map<double>(mask_from(32, 32, ones));
        CHECK(keep.at(0, 6, 7) == 0.0);
        CHECK(keep.at(0, 4, 7) == 1.0);
    }
    SUBCASE("soft masks rejected") {
        CHECK_THROWS_AS(mask_out_shadows(img, ShadowMask(Image(32, 32, 0.5f), false)), ArgumentError);
    }
}

TEST_CASE("calibration balancing rules") {
    CHECK(running_mean(std::vector<double>{1, 2, 3, 4}, 2) == 3.5);
    CHECK(running_mean(std::vector<double>{1, 2}, 50) == 1.5);
    CHECK_THROWS_AS(running_mean(std::vector<double>{}, 3), CalibrationError);

    // equal magnitudes give unit weights
    CHECK(balance_content_weights(std::vector<double>{2, 2, 2}, 2.0) == std::vector<double>{1, 1, 1});
    const auto w = balance_content_weights(std::vector<double>{4, 1, 0.5}, 2.0);
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 2.0);
    CHECK(w[2] == 4.0);
    const auto k = balance_style_weights(std::vector<double>{1e4, 50}, std::vector<double>{2, 2});
    CHECK(k[0] == doctest::Approx(2e-4));
    CHECK(k[1] == doctest::Approx(0.04));
    CHECK_THROWS_AS(balance_content_weights(std::vector<double>{1}, 0.0), CalibrationError);
    CHECK_THROWS_AS(balance_style_weights(std::vector<double>{0.0}, std::vector<double>{1}), CalibrationError);
}

TEST_CASE("calibration driver on a synthetic loss model") {
    // Raw terms are fixed per network; only the weights change what a run reports.
    const std::vector<double> content{0.5, 2.0, 8.0};
    const std::vector<double> style{1e3, 4e4, 2e5};
    int runs = 0;
    CalibrationRunner runner = [&](const LossWeights&, int batches) {
        ++runs;
        std::vector<LossTerms> out(batches);
        for (auto& t : out) {
            t.content = content;
            t.style = style;
            t.shadow = 1.0;
        }
        return out;
    };
    CalibrationOptions opts;
    opts.window = 4;
    const CalibrationResult r = calibrate_weights(runner, 3, opts);
    for (int j = 0; j < 3; ++j) {
        CHECK(r.weights.content[j] * content[j] == doctest::Approx(1.0));
        CHECK(r.weights.style[j] * style[j] == doctest::Approx(1.0));
        CHECK(r.final_style_to_content[j] == doctest::Approx(1.0));
    }
    CHECK(runs == 2);
    CHECK_NOTHROW(r.weights.validate());
    CHECK_THROWS_AS(calibrate_weights(runner, 0, opts), ConfigError);
}

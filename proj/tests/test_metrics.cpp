#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "oct/error.hpp"
#include "oct/metrics.hpp"
#include "oct/phantom.hpp"
#include "oct/report.hpp"
#include "test_support.hpp"

using namespace oct;

namespace {

// Brute-force oracles, written without shared helpers.
double naive_agm(const Image& im) {
    const int h = im.height(), w = im.width();
    double s = 0.0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double gx, gy;
            if (c == 0) gx = (im(r, 1) - im(r, 0)) / 2.0;
            else if (c == w - 1) gx = (im(r, w - 1) - im(r, w - 2)) / 2.0;
            else gx = (im(r, c + 1) - im(r, c - 1)) / 2.0;
            if (r == 0) gy = (im(1, c) - im(0, c)) / 2.0;
            else if (r == h - 1) gy = (im(h - 1, c) - im(h - 2, c)) / 2.0;
            else gy = (im(r + 1, c) - im(r - 1, c)) / 2.0;
            s += std::hypot(gx, gy);
        }
    return s / (h * w) / std::sqrt(2.0);
}

double naive_ssim(const Image& x, const Image& y) {
    const int win = 7;
    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    int count = 0;
    for (int r = 0; r + win <= x.height(); ++r)
        for (int c = 0; c + win <= x.width(); ++c) {
            double mx = 0, my = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    mx += x(r + i, c + j);
                    my += y(r + i, c + j);
                }
            mx /= 49.0;
            my /= 49.0;
            double vx = 0, vy = 0, cxy = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double a = x(r + i, c + j) - mx, b = y(r + i, c + j) - my;
                    vx += a * a;
                    vy += b * b;
                    cxy += a * b;
                }
            vx /= 48.0;
            vy /= 48.0;
            cxy /= 48.0;
            total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return total / count;
}

double naive_cnr(const Image& im, const std::vector<Roi>& tissue, const Roi& bg) {
    auto stats = [&](const Roi& roi) {
        std::vector<double> v;
        for (int r = roi.row; r < roi.row + roi.height; ++r)
            for (int c = roi.col; c < roi.col + roi.width; ++c) v.push_back(im(r, c));
        double m = 0;
        for (double x : v) m += x;
        m /= v.size();
        double var = 0;
        for (double x : v) var += (x - m) * (x - m);
        return std::pair{m, var / v.size()};
    };
    const auto [mb, vb] = stats(bg);
    double s = 0;
    for (const Roi& t : tissue) {
        const auto [mr, vr] = stats(t);
        s += std::abs(mr - mb) / std::sqrt((vr + vb) / 2.0);
    }
    return s / tissue.size();
}

Image ramp(int h, int w, double slope) {
    Image im(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) im(r, c) = static_cast<float>(slope * c);
    return im;
}

}  // namespace

TEST_CASE("metrics agree with brute-force oracles on random images") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Image x = test::random_image(16, 16, s);
        const Image y = test::random_image(16, 16, s + 1000, 0.05f, 1.0f);
        CHECK(test::rel_err(agm(x), naive_agm(x)) < 1e-6);
        CHECK(test::rel_err(ssim(x, y), naive_ssim(x, y)) < 1e-6);
        double err = 0, en = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            err += std::pow(double(y.pixels()[i]) - x.pixels()[i], 2);
            en += std::pow(double(y.pixels()[i]), 2);
        }
        CHECK(test::rel_err(paper_psnr(x, y), 10 * std::log10(en / err)) < 1e-6);
        CHECK(test::rel_err(standard_psnr(x, y), 10 * std::log10(256.0 / err)) < 1e-6);
        const std::vector<Roi> tissue{{4, 4, 4, 4}, {8, 2, 5, 5}, {10, 10, 6, 6}};
        const Roi bg{0, 0, 3, 16, RoiLabel::background};
        CHECK(test::rel_err(cnr(x, tissue, bg), naive_cnr(x, tissue, bg)) < 1e-6);
    }
}

TEST_CASE("agm") {
    // interior of a horizontal ramp has gradient magnitude s
    const double s = 0.01;
    const Image im = ramp(64, 64, s);
    CHECK(test::rel_err(agm(im), s / std::sqrt(2.0)) < 0.05);
    CHECK(agm(Image(32, 32, 0.4f)) == 0.0);
    const Image x = test::random_image(20, 30, 3);
    CHECK(test::rel_err(agm(x), agm(x.transposed())) < 1e-9);
    CHECK_THROWS_AS(agm(Image(1, 5)), ArgumentError);
}

TEST_CASE("psnr") {
    const Image ref(16, 16, 1.0f);
    SUBCASE("paper variant, 20 dB") {
        const Image p(16, 16, 0.9f);
        CHECK(paper_psnr(p, ref) == doctest::Approx(20.0).epsilon(1e-5));
    }
    SUBCASE("identical is +inf, zero reference throws") {
        CHECK(paper_psnr(ref, ref) == std::numeric_limits<double>::infinity());
        CHECK(standard_psnr(ref, ref) == std::numeric_limits<double>::infinity());
        CHECK_THROWS_AS(paper_psnr(ref, Image(16, 16)), ArgumentError);
        CHECK_THROWS_AS(paper_psnr(ref, Image(16, 8, 1.0f)), ArgumentError);
    }
    SUBCASE("halving the error adds 6.02 dB") {
        const Image a(16, 16, 0.8f), b(16, 16, 0.9f);
        CHECK(paper_psnr(b, ref) - paper_psnr(a, ref) == doctest::Approx(20 * std::log10(2.0)).epsilon(1e-4));
        CHECK(standard_psnr(b, ref) - standard_psnr(a, ref) == doctest::Approx(20 * std::log10(2.0)).epsilon(1e-4));
    }
    SUBCASE("monotone in noise level") {
        const Image clean = test::random_image(32, 32, 5, 0.2f, 0.8f);
        double last = std::numeric_limits<double>::infinity();
        for (float sigma : {0.01f, 0.05f, 0.1f, 0.2f}) {
            Image noisy = clean;
            const Image n = test::random_image(32, 32, 6, -1.0f, 1.0f);
            for (std::size_t i = 0; i < noisy.size(); ++i) noisy.pixels()[i] += sigma * n.pixels()[i];
            const double p = paper_psnr(noisy, clean);
            CHECK(p < last);
            last = p;
        }
    }
}

TEST_CASE("cnr") {
    Image im(10, 10);
    // tissue ROI: values 0.7 / 0.9 in a checkerboard, background 0.1 / 0.3
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) {
            const bool odd = (r + c) % 2;
            im(r, c) = r < 5 ? (odd ? 0.3f : 0.1f) : (odd ? 0.9f : 0.7f);
        }
    const Roi bg{0, 0, 4, 4, RoiLabel::background};
    const std::vector<Roi> tissue{{6, 6, 4, 4}};
    // |0.8 - 0.2| / sqrt((0.01 + 0.01) / 2) = 6
    CHECK(cnr(im, tissue, bg) == doctest::Approx(6.0).epsilon(1e-5));
    Image shifted = im;
    for (auto& v : shifted.pixels()) v += 0.05f;
    CHECK(cnr(shifted, tissue, bg) == doctest::Approx(6.0).epsilon(1e-4));
    CHECK_THROWS_AS(cnr(Image(10, 10, 0.5f), tissue, bg), DegenerateError);
    CHECK_THROWS_AS(cnr(im, std::vector<Roi>{}, bg), ArgumentError);
    CHECK_THROWS_AS(cnr(im, std::vector<Roi>{{8, 8, 4, 4}}, bg), ArgumentError);
}

TEST_CASE("ssim") {
    const Image x = test::random_image(32, 32, 7);
    const Image y = test::random_image(32, 32, 8);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ssim(Image(32, 32), Image(32, 32, 1.0f)) < 0.05);
    CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
    CHECK(ssim(x, y) < 0.5);
    CHECK_THROWS_AS(ssim(Image(5, 5), Image(5, 5)), ArgumentError);
    CHECK_THROWS_AS(ssim(x, Image(32, 31)), ArgumentError);
}

TEST_CASE("ilc") {
    Image im(20, 20, 0.6f);
    for (int r = 10; r < 20; ++r)
        for (int c = 0; c < 20; ++c) im(r, c) = 0.2f;
    const std::vector<Roi> free{{0, 0, 5, 5}, {2, 10, 5, 5}};
    const std::vector<Roi> dark{{12, 0, 5, 5}};
    CHECK(ilc(im, free, dark) == doctest::Approx(0.5));
    CHECK(ilc(im, free, free) == 0.0);
    Image zero = im;
    for (int r = 10; r < 20; ++r)
        for (int c = 0; c < 20; ++c) zero(r, c) = 0.0f;
    CHECK(ilc(zero, free, dark) == 1.0);
    CHECK_THROWS_AS(ilc(Image(20, 20), free, dark), DegenerateError);
    CHECK_THROWS_AS(ilc(im, {}, dark), ArgumentError);
}

TEST_CASE("lpi") {
    Image im(16, 8, 0.5f);
    const std::vector<int> path(8, 5);
    const LpiProfile flat = lpi_profile(im, path, 1);
    CHECK(flat.flatness == 0.0);
    CHECK(flat.profile == std::vector<double>(8, 0.5));
    // vessel dip in column 3
    for (int r = 4; r <= 6; ++r) im(r, 3) = 0.1f;
    const LpiProfile dip = lpi_profile(im, path, 1);
    CHECK(dip.profile[3] == doctest::Approx(0.1));
    const double mean = (7 * 0.5 + 0.1) / 8;
    const double sd = std::sqrt((7 * std::pow(0.5 - mean, 2) + std::pow(0.1 - mean, 2)) / 8);
    CHECK(dip.flatness == doctest::Approx(sd / mean).epsilon(1e-5));
    Image zero_mean(16, 8);
    zero_mean(5, 0) = 1.0f;
    zero_mean(5, 1) = -1.0f;
    CHECK_THROWS_AS(lpi_profile(zero_mean, path, 0), DegenerateError);
    CHECK_THROWS_AS(lpi_profile(im, std::vector<int>(7, 5), 1), ArgumentError);
    CHECK_THROWS_AS(lpi_profile(im, std::vector<int>(8, 15), 1), ArgumentError);
}

TEST_CASE("roi sampling") {
    PixelSet region(20, 20, true);
    CHECK(sample_rois(region, 0, 5, 1).empty());
    const auto a = sample_rois(region, 10, 5, 42);
    CHECK(a == sample_rois(region, 10, 5, 42));
    CHECK(a != sample_rois(region, 10, 5, 43));
    std::set<std::pair<int, int>> seen;
    for (const Roi& r : a) {
        CHECK(r.inside(20, 20));
        seen.insert({r.row, r.col});
    }
    CHECK(seen.size() == 10);
    CHECK(roi_placements(region, 5).size() == 16 * 16);

    SUBCASE("forced placement") {
        PixelSet block(20, 20);
        for (int r = 3; r < 8; ++r)
            for (int c = 11; c < 16; ++c) block.set(r, c);
        const auto one = sample_rois(block, 1, 5, 9);
        REQUIRE(one.size() == 1);
        CHECK(one[0] == Roi{3, 11, 5, 5, RoiLabel::tissue});
        CHECK_THROWS_AS(sample_rois(block, 2, 5, 9), SamplingError);
        CHECK_THROWS_AS(sample_rois(block, 1, 6, 9), SamplingError);
    }
    SUBCASE("holes are avoided") {
        PixelSet holed = region;
        for (int r = 0; r < 20; ++r) holed.set(r, 10, false);
        PixelSet hole(20, 20);
        for (int r = 0; r < 20; ++r) hole.set(r, 10);
        for (const Roi& r : sample_rois(holed, 50, 4, 3)) CHECK_FALSE(roi_intersects(r, hole));
    }
}

TEST_CASE("plan and measure on a phantom") {
    const PhantomSpec spec = flat_phantom_spec(128, 128, {30, 50, 70, 100}, {0.05, 0.6, 0.4, 0.8, 0.3},
                                               {Vessel{64, 5, 0.3}});
    const ImagePair pair = generate_phantom(spec, 1, "p0");
    MeasureOptions opts;
    opts.seed = 3;
    const ImageRois rois = plan_rois(spec, pair.mask, "p0", opts);
    CHECK(rois.tissue.size() == 4);
    CHECK(plan_rois(spec, pair.mask, "p0", opts).tissue == rois.tissue);
    const PixelSet shadow = PixelSet::from_mask(pair.mask);
    for (const auto& [layer, list] : rois.tissue) {
        CHECK(layer >= 1);
        CHECK(list.size() == 25);
        for (const Roi& r : list) CHECK_FALSE(roi_intersects(r, shadow));
    }
    const AttenuationMap att = AttenuationMap::from_spec(spec);
    const BScan shadowed = apply_shadow(pair.clean, pair.mask, att);
    MetricReport report;
    measure_image(report, shadowed.image(), "p0", "multiframe", pair.clean.image(), spec, rois, opts);
    measure_image(report, pair.clean.image(), "p0", "processed", pair.clean.image(), spec, rois, opts);
    const auto ssim_rows = report.find("processed", metric_names::ssim);
    REQUIRE(ssim_rows.size() == 1);
    CHECK(ssim_rows[0]->value == doctest::Approx(1.0));
    CHECK(report.find("processed", metric_names::paper_psnr)[0]->value == std::numeric_limits<double>::infinity());
    for (const MetricRow* r : report.find("processed", metric_names::ilc)) CHECK(r->value < 0.02);
    for (const MetricRow* r : report.find("multiframe", metric_names::ilc)) CHECK(r->value > 0.3);
}

TEST_CASE("normalize_report") {
    MetricReport mf, proc;
    mf.add({"a", "multiframe", "agm", -1, 0.2, std::nullopt});
    mf.add({"a", "multiframe", "cnr", 1, 0.0, std::nullopt});
    mf.add({"a", "multiframe", "ilc", 1, 0.4, std::nullopt});
    proc.add({"a", "processed", "agm", -1, 0.1, std::nullopt});
    proc.add({"a", "processed", "cnr", 1, 3.0, std::nullopt});
    proc.add({"a", "processed", "ilc", 1, 0.1, std::nullopt});

    const MetricReport self = normalize_report(mf, mf);
    CHECK(self.rows[0].normalized == 1.0);
    CHECK_FALSE(self.rows[2].normalized.has_value());

    const MetricReport out = normalize_report(proc, mf);
    CHECK(out.rows[0].normalized == doctest::Approx(0.5));
    CHECK_FALSE(out.rows[1].normalized.has_value());
    CHECK_FALSE(out.rows[2].normalized.has_value());
    CHECK(out.notes.size() == 1);
    CHECK(out.normalization_reference == "multiframe");

    CHECK(normalize_report(MetricReport{}, mf).empty());
    MetricReport stray;
    stray.add({"b", "processed", "agm", -1, 0.1, std::nullopt});
    CHECK_THROWS_AS(normalize_report(stray, mf), ArgumentError);
}

TEST_CASE("report csv and aggregation") {
    MetricReport r;
    r.add({"x1", "noisy", "psnr", -1, 12.5, 0.9});
    r.add({"x2", "noisy", "psnr", -1, 0.1 + 0.2, std::nullopt});
    r.add({"x3", "noisy", "psnr", -1, std::numeric_limits<double>::infinity(), std::nullopt});
    r.add({"x1", "noisy", "cnr", 2, -1e-300, 1.0 / 3.0});
    const MetricReport back = MetricReport::from_csv(r.to_csv());
    CHECK(back.rows == r.rows);
    CHECK(back.to_csv() == r.to_csv());
    CHECK(r.to_csv().rfind("image_id,kind,metric,layer,value,normalized\n", 0) == 0);

    const auto summary = r.aggregate();
    const auto it = std::find_if(summary.begin(), summary.end(), [](const MetricSummary& s) { return s.metric == "psnr"; });
    REQUIRE(it != summary.end());
    CHECK(it->rows == 3);
    CHECK(it->finite == 2);
    const double m = (12.5 + 0.3) / 2;
    CHECK(it->mean == doctest::Approx(m));
    CHECK(it->stddev == doctest::Approx(std::sqrt(std::pow(12.5 - m, 2) + std::pow(0.3 - m, 2))));
    CHECK(it->normalized_rows == 1);
    CHECK(r.mean_of("noisy", "psnr") == doctest::Approx(m));
    CHECK_FALSE(r.mean_of("noisy", "ssim").has_value());
    CHECK(r.summary_json().is_object());
    CHECK_THROWS(MetricReport::from_csv("bad,header\n"));
}

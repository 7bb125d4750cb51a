#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "oct/cv_bridge.hpp"
#include "oct/error.hpp"
#include "oct/evaluate.hpp"
#include "oct/io.hpp"

namespace oct {

Image comparison_grid(const BScan& noisy, const BScan& processed, const BScan& multiframe) {
    if (!noisy.image().same_shape(processed.image()) || !noisy.image().same_shape(multiframe.image()))
        throw ArgumentError("comparison grid needs equally sized images");
    constexpr int bar = 4;
    const int h = noisy.height();
    const int w = noisy.width();
    Image out(h, 3 * w + 2 * bar, 1.0f);
    const BScan* panels[] = {&noisy, &processed, &multiframe};
    for (int p = 0; p < 3; ++p)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) out(r, p * (w + bar) + c) = panels[p]->image()(r, c);
    return out;
}

void write_lpi_plot(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    const std::filesystem::path& path, int height, int width) {
    if (series.empty()) throw ArgumentError("LPI plot needs at least one profile");
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
    const int margin = 24;
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const auto& [name, values] : series)
        for (double v : values) {
            if (!std::isfinite(v)) continue;
            lo = first ? v : std::min(lo, v);
            hi = first ? v : std::max(hi, v);
            first = false;
        }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    cv::rectangle(canvas, {margin, margin}, {width - margin, height - margin}, cv::Scalar(0, 0, 0));
    const cv::Scalar colours[] = {{40, 40, 200}, {200, 90, 30}, {30, 150, 30}, {120, 0, 140}};
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& values = series[s].second;
        if (values.size() < 2) continue;
        std::vector<cv::Point> pts;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double x = margin + (width - 2.0 * margin) * static_cast<double>(i) / (values.size() - 1);
            const double y = height - margin - (height - 2.0 * margin) * (values[i] - lo) / (hi - lo);
            pts.emplace_back(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)));
        }
        const cv::Scalar colour = colours[s % 4];
        cv::polylines(canvas, pts, false, colour, 1, cv::LINE_AA);
        cv::putText(canvas, series[s].first, {margin + 4 + 110 * static_cast<int>(s), 16}, cv::FONT_HERSHEY_SIMPLEX,
                    0.4, colour, 1, cv::LINE_AA);
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), canvas)) throw IoError("cannot write " + path.string());
}

void render_report(const Dataset& testset, const Evaluation& evaluation, const std::filesystem::path& dir,
                   int max_images) {
    std::filesystem::create_directories(dir);
    const std::size_t n = std::min(testset.size(), static_cast<std::size_t>(std::max(max_images, 0)));
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = testset[i];
        if (!s.noisy) throw ArgumentError("test sample " + s.id + " has no noisy input");
        save_image(comparison_grid(*s.noisy, evaluation.processed.at(i), s.multiframe), dir / (s.id + "_grid.png"));
        for (int layer = 1; layer < s.spec.layer_count(); ++layer) {
            std::vector<std::pair<std::string, std::vector<double>>> series;
            for (const auto& p : evaluation.report.profiles)
                if (p.image_id == s.id && p.layer == layer) series.emplace_back(p.kind, p.values);
            if (!series.empty())
                write_lpi_plot(series, dir / (s.id + "_lpi_layer" + std::to_string(layer) + ".png"));
        }
    }
}

}  // namespace oct

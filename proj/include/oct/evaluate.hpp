#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "oct/dataset.hpp"
#include "oct/report.hpp"
#include "oct/unet.hpp"

namespace oct {

struct InferResult {
    BScan output;
    double latency_ms = 0.0;
};

// Network dimensions for an image: each side rounded to the nearest
// multiple of the UNet size divisor (never below one divisor).
std::pair<int, int> network_dims(int height, int width, const UNet<float>& processor);

// Resize to network dims, forward, resize back, min-max scale.
InferResult infer(const BScan& image, const UNet<float>& processor);
// Outputs in input order.
std::vector<InferResult> infer_batch(const std::vector<BScan>& images, const UNet<float>& processor, int workers = 1);

struct EvaluateOptions {
    MeasureOptions measure;
    int workers = 1;
};

struct Evaluation {
    MetricReport report;
    std::vector<BScan> processed;  // testset order
    double mean_latency_ms = 0.0;
};

// Rows for kinds "noisy", "processed" and "multiframe" against the
// shadow-free clean reference, normalized by the multiframe rows. With a
// detector, adds shadow_loss rows.
Evaluation evaluate(const Dataset& testset, const UNet<float>& processor, const UNet<float>* detector,
                    const EvaluateOptions& options);
// Same, with the processed images supplied by the caller.
MetricReport evaluate_outputs(const Dataset& testset, const std::vector<BScan>& processed,
                              const UNet<float>* detector, const EvaluateOptions& options);

// single-frame | processed | multi-frame, separated by white bars.
Image comparison_grid(const BScan& noisy, const BScan& processed, const BScan& multiframe);
// Line plot of LPI profiles; one colour per series, written as PNG.
void write_lpi_plot(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    const std::filesystem::path& path, int height = 240, int width = 480);
// Grids and LPI plots for the first `max_images` samples of an evaluation.
void render_report(const Dataset& testset, const Evaluation& evaluation, const std::filesystem::path& dir,
                   int max_images = 4);

}  // namespace oct

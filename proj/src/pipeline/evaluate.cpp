#include "oct/evaluate.hpp"

#include <chrono>
#include <cmath>

#include "oct/error.hpp"
#include "oct/losses.hpp"
#include "oct/transform.hpp"

namespace oct {

std::pair<int, int> network_dims(int height, int width, const UNet<float>& processor) {
    const int d = processor.config().size_divisor();
    auto round = [d](int v) { return std::max(d, static_cast<int>(std::lround(static_cast<double>(v) / d)) * d); };
    return {round(height), round(width)};
}

InferResult infer(const BScan& image, const UNet<float>& processor) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [h, w] = network_dims(image.height(), image.width(), processor);
    const Image input = resize(image.image(), h, w);
    const Image raw = to_image(processor.predict(to_tensor<float>(input)));
    Image back = min_max_scale(resize(raw, image.height(), image.width()));
    InferResult out{BScan(std::move(back), image.id(), ImageKind::processed)};
    out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<InferResult> infer_batch(const std::vector<BScan>& images, const UNet<float>& processor, int workers) {
    std::vector<InferResult> out(images.size());
    parallel_for(images.size(), workers, [&](std::size_t i) { out[i] = infer(images[i], processor); });
    return out;
}

MetricReport evaluate_outputs(const Dataset& testset, const std::vector<BScan>& processed,
                              const UNet<float>* detector, const EvaluateOptions& options) {
    if (processed.size() != testset.size()) throw ArgumentError("one processed image per test sample is required");
    for (const Sample& s : testset) {
        if (!s.noisy) throw ArgumentError("test sample " + s.id + " has no noisy input");
        if (s.clean.image().empty() || s.mask.values().empty())
            throw ArgumentError("test sample " + s.id + " lacks its clean reference or mask");
    }
    std::vector<MetricReport> parts(testset.size());
    parallel_for(testset.size(), options.workers, [&](std::size_t i) {
        const Sample& s = testset[i];
        MetricReport& part = parts[i];
        const ImageRois rois = plan_rois(s.spec, s.mask, s.id, options.measure);
        record_rois(part, s.id, rois);
        const std::pair<const char*, const BScan*> kinds[] = {
            {"noisy", &*s.noisy}, {"processed", &processed[i]}, {"multiframe", &s.multiframe}};
        for (const auto& [kind, scan] : kinds) {
            measure_image(part, scan->image(), s.id, kind, s.clean.image(), s.spec, rois, options.measure);
            if (detector && s.mask.sum() > 0.0) {
                const Tensor<float> p = detector->predict(to_tensor<float>(scan->image()));
                const double v = shadow_loss<float>(p, to_tensor<float>(s.mask.values()));
                part.add(MetricRow{s.id, kind, metric_names::shadow_loss, -1, v, std::nullopt});
            }
        }
    });
    MetricReport all;
    for (const auto& p : parts) all.merge(p);
    all.sort();
    MetricReport multiframe;
    for (const auto& r : all.rows)
        if (r.kind == "multiframe") multiframe.rows.push_back(r);
    MetricReport out = normalize_report(all, multiframe);
    out.notes.push_back("reference for psnr/ssim: shadow-free clean phantom");
    out.sort();
    return out;
}

Evaluation evaluate(const Dataset& testset, const UNet<float>& processor, const UNet<float>* detector,
                    const EvaluateOptions& options) {
    Evaluation ev;
    if (testset.empty()) return ev;
    std::vector<BScan> inputs;
    for (const Sample& s : testset) {
        if (!s.noisy) throw ArgumentError("test sample " + s.id + " has no noisy input");
        inputs.push_back(*s.noisy);
    }
    double latency = 0.0;
    for (auto& r : infer_batch(inputs, processor, options.workers)) {
        latency += r.latency_ms;
        ev.processed.push_back(std::move(r.output));
    }
    ev.mean_latency_ms = latency / static_cast<double>(testset.size());
    ev.report = evaluate_outputs(testset, ev.processed, detector, options);
    return ev;
}

}  // namespace oct

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oct/error.hpp"
#include "oct/losses.hpp"

namespace oct {

double running_mean(std::span<const double> values, int window) {
    if (values.empty()) throw CalibrationError("running mean of an empty loss stream");
    const std::size_t n = std::min(values.size(), static_cast<std::size_t>(std::max(window, 1)));
    double sum = 0.0;
    for (std::size_t i = values.size() - n; i < values.size(); ++i) sum += values[i];
    return sum / static_cast<double>(n);
}

std::vector<double> balance_content_weights(std::span<const double> content_means, double shadow_mean) {
    if (!(std::abs(shadow_mean) > 0.0)) throw CalibrationError("shadow loss stream has zero magnitude");
    std::vector<double> w;
    for (double c : content_means) {
        if (!(std::abs(c) > 0.0)) throw CalibrationError("content loss stream has zero magnitude");
        w.push_back(std::abs(shadow_mean) / std::abs(c));
    }
    return w;
}

std::vector<double> balance_style_weights(std::span<const double> style_means, std::span<const double> targets) {
    if (style_means.size() != targets.size()) throw ConfigError("style/target term counts differ");
    std::vector<double> k;
    for (std::size_t j = 0; j < style_means.size(); ++j) {
        if (!(std::abs(style_means[j]) > 0.0)) throw CalibrationError("style loss stream has zero magnitude");
        k.push_back(std::abs(targets[j]) / std::abs(style_means[j]));
    }
    return k;
}

namespace {

struct StreamMeans {
    std::vector<double> content;
    std::vector<double> style;
    double shadow = 0.0;
};

StreamMeans means_of(const std::vector<LossTerms>& terms, int n_terms, int window) {
    if (terms.empty()) throw CalibrationError("calibration run produced no batches");
    StreamMeans m;
    std::vector<double> stream(terms.size());
    for (int j = 0; j < n_terms; ++j) {
        for (std::size_t b = 0; b < terms.size(); ++b) stream[b] = terms[b].content.at(j);
        m.content.push_back(running_mean(stream, window));
        for (std::size_t b = 0; b < terms.size(); ++b) stream[b] = terms[b].style.at(j);
        m.style.push_back(running_mean(stream, window));
    }
    for (std::size_t b = 0; b < terms.size(); ++b) stream[b] = terms[b].shadow;
    m.shadow = running_mean(stream, window);
    return m;
}

std::string describe(const char* stage, const StreamMeans& m) {
    std::ostringstream s;
    s << stage << ": shadow=" << m.shadow << " content=";
    for (double c : m.content) s << c << " ";
    s << "style=";
    for (double v : m.style) s << v << " ";
    return s.str();
}

}  // namespace

CalibrationResult calibrate_weights(const CalibrationRunner& runner, int content_terms,
                                    const CalibrationOptions& options) {
    if (content_terms < 1) throw ConfigError("calibration needs at least one perceptual network");
    CalibrationResult result;

    // Stage 1: style disabled. k must be positive for LossWeights, so stage 1
    // passes explicit zeros straight to the runner.
    LossWeights stage1;
    stage1.content.assign(content_terms, 1.0);
    stage1.style.assign(content_terms, 0.0);
    const StreamMeans m1 = means_of(runner(stage1, options.window), content_terms, options.window);
    result.log.push_back(describe("stage1", m1));
    const std::vector<double> w = balance_content_weights(m1.content, m1.shadow);

    // Stage 2: seed k from the raw style magnitudes seen in stage 1, then
    // re-measure under the new weights until within tolerance.
    std::vector<double> targets(content_terms);
    for (int j = 0; j < content_terms; ++j) targets[j] = w[j] * m1.content[j];
    std::vector<double> k = balance_style_weights(m1.style, targets);
    StreamMeans m2;
    std::vector<double> ratio(content_terms, 0.0);
    for (int round = 0; round < options.max_style_rounds; ++round) {
        LossWeights weights{w, k};
        m2 = means_of(runner(weights, options.window), content_terms, options.window);
        result.log.push_back(describe("stage2", m2));
        bool within = true;
        for (int j = 0; j < content_terms; ++j) {
            const double weighted_content = w[j] * m2.content[j];
            if (!(weighted_content > 0.0)) throw CalibrationError("content loss stream has zero magnitude");
            ratio[j] = k[j] * m2.style[j] / weighted_content;
            within = within && ratio[j] <= options.tolerance && ratio[j] >= 1.0 / options.tolerance;
        }
        if (within) break;
        for (int j = 0; j < content_terms; ++j) targets[j] = w[j] * m2.content[j];
        k = balance_style_weights(m2.style, targets);
    }
    result.weights = LossWeights{w, k};
    result.content_means = m2.content;
    result.style_means = m2.style;
    result.shadow_mean = m1.shadow;
    result.final_style_to_content = ratio;
    return result;
}

}  // namespace oct

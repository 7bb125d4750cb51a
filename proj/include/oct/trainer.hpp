#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "oct/adam.hpp"
#include "oct/checkpoint.hpp"
#include "oct/config.hpp"
#include "oct/dataset.hpp"
#include "oct/extractor.hpp"
#include "oct/losses.hpp"
#include "oct/unet.hpp"

namespace oct {

struct EpochRecord {
    int epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_dice = std::numeric_limits<double>::quiet_NaN();  // detector only
};

struct TrainOptions {
    // When set: checkpoint of the best epoch, loss CSV and divergence dump.
    std::filesystem::path output_dir;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
    explicit TrainResult(UNet<float> m) : model(std::move(m)) {}

    UNet<float> model;
    int best_epoch = -1;
    double best_validation_loss = std::numeric_limits<double>::infinity();
    std::vector<EpochRecord> history;
    bool stopped_early = false;
};

// 2|P n G| / (|P| + |G|); 1 when both are empty.
double dice(const ShadowMask& prediction, const ShadowMask& truth);

// Thresholded detector output at 0.5.
ShadowMask predict_mask(const UNet<float>& detector, const BScan& image);

// Mean per-pixel binary cross-entropy of logits against a 0/1 target; the
// gradient with respect to the logits is written when requested.
double bce_with_logits(const Tensor<float>& logits, const Tensor<float>& target, Tensor<float>* grad = nullptr);

UNet<float> make_detector(const AppConfig& config);
UNet<float> make_processor(const AppConfig& config);
std::vector<FeatureExtractor<float>> make_extractors(const AppConfig& config);

TrainResult train_detector(const Dataset& train, const Dataset& validation, const AppConfig& config,
                           const TrainOptions& options = {});

// Processor objective on one sample, with the detector frozen.
class ProcessorSession {
public:
    ProcessorSession(const AppConfig& config, UNet<float>& processor, const UNet<float>& detector,
                     const std::vector<FeatureExtractor<float>>& extractors);

    // Raw terms of one sample; accumulates parameter gradients when `train`.
    LossTerms sample_terms(const Sample& sample, const BScan& noisy_input, const LossWeights& weights, bool train);
    // One optimisation step over `batch`; returns the batch-mean raw terms.
    LossTerms train_batch(std::span<const Sample* const> batch, int epoch, const LossWeights& weights, Adam& adam);
    // Mean raw terms over a fixed-noise validation pass.
    LossTerms evaluate(const Dataset& data, const LossWeights& weights);

    // Single-frame input for training (per-epoch noise) or validation (fixed).
    BScan noisy_input(const Sample& sample, int epoch, bool validation) const;

private:
    const AppConfig& config_;
    UNet<float>& processor_;
    const UNet<float>& detector_;
    const std::vector<FeatureExtractor<float>>& extractors_;
};

// `detector` stays frozen unless config.alternating is set, in which case it
// takes one epoch of its own training every detector_epoch_every epochs.
TrainResult train_processor(const Dataset& train, const Dataset& validation, UNet<float>& detector,
                            const std::vector<FeatureExtractor<float>>& extractors, const LossWeights& weights,
                            const AppConfig& config, const TrainOptions& options = {});

// Two-stage weight calibration on a fresh processor.
CalibrationResult calibrate_processor_weights(const Dataset& train, const UNet<float>& detector,
                                              const std::vector<FeatureExtractor<float>>& extractors,
                                              const AppConfig& config, const CalibrationOptions& options = {});

void save_weights(const LossWeights& weights, const std::filesystem::path& path);
LossWeights load_weights(const std::filesystem::path& path);

}  // namespace oct

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "oct/extractor.hpp"
#include "oct/losses.hpp"
#include "oct/noise.hpp"
#include "oct/report.hpp"

namespace oct {

struct TrainConfig {
    std::string optimizer = "adam";
    double learning_rate = 1e-5;
    int batch_size = 6;
    int lr_halving_epochs = 10;
    int max_epochs = 100;
    int patience = 10;  // epochs without a validation-loss improvement
    int base_channels = 64;
    int depth = 4;

    void validate() const;
    // learning_rate * 0.5^floor(epoch / lr_halving_epochs)
    double learning_rate_at(int epoch) const;
};

struct DataConfig {
    int count = 200;
    int height = 128;
    int width = 128;
    double texture_amplitude = 0.05;

    void validate() const;
};

struct AppConfig {
    std::uint64_t seed = 0;
    int workers = 1;
    std::filesystem::path output_dir;

    DataConfig data;
    NoiseParams noise;
    AugmentParams augment;
    TrainConfig detector;
    TrainConfig processor;
    bool alternating = false;
    int detector_epoch_every = 5;  // alternating mode: processor epochs per detector epoch
    LossWeights weights;
    WeightsSource extractor_source = WeightsSource::frozen_random;
    std::filesystem::path extractor_weights_dir;
    MeasureOptions measure;

    void validate() const;
};

// Reads an INI file ([run] [data] [noise] [augment] [detector] [processor]
// [losses] [extractors] [metrics]) over the defaults. Unknown sections or
// keys and unparsable values are ConfigErrors.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(const std::string& text);

// Flattened "section.key" -> value view; stored in checkpoint manifests.
std::map<std::string, std::string> config_snapshot(const AppConfig& config);

// Output root: explicit value, else $OCTRESTORE_OUTPUT_DIR, else "octrestore_out".
std::filesystem::path resolve_output_root(const std::filesystem::path& explicit_dir);

}  // namespace oct

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "oct/adam.hpp"
#include "oct/params.hpp"
#include "oct/unet.hpp"

namespace oct {

// Binary parameter blob: magic, count, then per parameter name, shape and
// little-endian float32 values.
void write_params(const ParamStore<float>& params, const std::filesystem::path& path);
// Reads into `params`, which must already have the matching layout.
void read_params(ParamStore<float>& params, const std::filesystem::path& path);

// A model directory: manifest.txt (key = value), params.bin, optimizer.bin.
struct Checkpoint {
    UNetConfig architecture;
    std::string role;  // "detector" or "processor"
    int epoch = 0;
    std::uint64_t global_seed = 0;
    std::map<std::string, std::string> config_snapshot;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& meta, const UNet<float>& model,
                     const Adam* optimizer = nullptr);

struct LoadedCheckpoint {
    Checkpoint meta;
    UNet<float> model;
    AdamState optimizer;
};

// Throws IoError when files are missing and DataError when the blobs do not
// match the manifest (size, layout or hash).
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace oct

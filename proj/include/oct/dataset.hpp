#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oct/config.hpp"
#include "oct/image.hpp"
#include "oct/phantom.hpp"

namespace oct {

// One phantom: shadow-free clean reference, its vessel mask, the shadowed
// multi-frame stand-in and (when stored) a fixed noisy single-frame draw.
struct Sample {
    std::string id;
    PhantomSpec spec;
    BScan clean;
    ShadowMask mask;
    BScan multiframe;
    std::optional<BScan> noisy;
};

using Dataset = std::vector<Sample>;

// Builds `config.data.count` phantoms "phantom_0000"... in memory.
Dataset make_dataset(const AppConfig& config, std::uint64_t seed, const std::string& prefix = "phantom");
Sample make_sample(const std::string& id, const AppConfig& config, std::uint64_t seed);

// Layout: clean/ masks/ multiframe/ noisy/ (16-bit PNG) and specs/ (JSON).
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);
// Missing directories or files are IoErrors; ids that differ between the
// directories are DataErrors. noisy/ is optional.
Dataset load_dataset(const std::filesystem::path& root);

enum class Split { train, validation, test };
const char* to_string(Split split);
// 80/10/10 on the FNV-1a hash of the id.
Split split_of(const std::string& id);

struct DatasetSplit {
    Dataset train;
    Dataset validation;
    Dataset test;
};
DatasetSplit split_dataset(const Dataset& dataset);

// Runs fn(0..n-1) on up to `workers` threads. fn must write only to its own
// slot; the result is independent of the worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace oct

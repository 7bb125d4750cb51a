#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oct/graph.hpp"
#include "oct/image.hpp"
#include "oct/params.hpp"
#include "oct/tensor.hpp"

namespace oct {

enum class WeightsSource { imagenet_pretrained, frozen_random };

const char* to_string(WeightsSource source);
WeightsSource weights_source_from_string(const std::string& name);

// The three perceptual networks, in loss-weight order.
inline const std::array<std::string, 3> kPerceptualNetworks = {"efficientnet_b4", "wide_resnet101_2",
                                                               "resnext101_32x8d"};

struct FeatureExtractorSpec {
    std::string name;
    std::vector<std::string> tap_points;
    WeightsSource weights_source = WeightsSource::frozen_random;
    // Directory holding "<name>.params" when weights_source is pretrained.
    std::filesystem::path weights_dir;
    std::uint64_t seed = 0;

    // Default taps for a known network name: residual blocks 2/4/6/8 for the
    // two residual networks, the final conv layer for efficientnet_b4, and
    // the single conv of the "toy" two-channel test network.
    static FeatureExtractorSpec named(const std::string& name, WeightsSource source = WeightsSource::frozen_random,
                                      std::filesystem::path weights_dir = {});
};

// A frozen perceptual network. Desk-scale topologies keep the tap contract
// of the full-size networks (tap count, ReLU features, stride pattern) at a
// fraction of the width.
template <class T>
class FeatureExtractor {
public:
    using NodeId = typename Graph<T>::NodeId;

    explicit FeatureExtractor(FeatureExtractorSpec spec);

    const FeatureExtractorSpec& spec() const { return spec_; }
    const ParamStore<T>& params() const { return params_; }
    // Exposed for gradient diagnostics; the extractor itself never writes here.
    ParamStore<T>& params() { return params_; }

    // `image` is a 1 x H x W node in [0,1]. Replicates to RGB, normalizes with
    // ImageNet statistics and returns one node per tap point, in order.
    std::vector<NodeId> features(Graph<T>& graph, NodeId image) const;
    std::vector<Tensor<T>> extract(const Tensor<T>& image) const;

    std::vector<TensorShape> tap_shapes(int height, int width) const;

    template <class U>
    FeatureExtractor<U> cast() const;

private:
    struct Conv {
        int weight = -1;
        int bias = -1;
        int stride = 1;
        int kernel = 3;
    };
    struct Block {
        Conv conv1, conv2;
        Conv shortcut;  // weight < 0 for identity
        int out_channels = 0;
    };
    struct Stage {
        std::string tap;  // empty unless this stage is a tap point
        bool residual = false;
        Block block;      // residual stage
        Conv conv;        // plain conv stage
        int out_channels = 0;
    };

    Conv add_conv(const std::string& name, int in, int out, int k, int stride);
    NodeId apply(Graph<T>& graph, NodeId x, const Conv& c) const;
    void build_topology();

    template <class U>
    friend class FeatureExtractor;

    FeatureExtractorSpec spec_;
    ParamStore<T> params_;
    std::vector<Stage> stages_;
};

extern template class FeatureExtractor<float>;
extern template class FeatureExtractor<double>;

// Convenience wrapper on a B-scan; features are returned in float.
std::vector<Tensor<float>> extract_features(const BScan& image, const FeatureExtractor<float>& extractor);

}  // namespace oct

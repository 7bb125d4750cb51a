#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oct/graph.hpp"
#include "oct/params.hpp"
#include "oct/tensor.hpp"

namespace oct {

enum class FinalActivation { sigmoid, minmax_scale };

const char* to_string(FinalActivation act);
FinalActivation final_activation_from_string(const std::string& name);

struct UNetConfig {
    int in_channels = 1;
    int depth = 4;  // number of 2x downsamplings
    int base_channels = 64;
    std::vector<int> channel_schedule = {64, 128, 256, 512};
    int conv_kernel = 3;
    int conv_stride = 1;
    int pool_kernel = 2;
    FinalActivation final_activation = FinalActivation::sigmoid;

    static UNetConfig with_base(int base_channels, int depth, FinalActivation act);

    int size_divisor() const { return 1 << depth; }
    void validate() const;

    bool operator==(const UNetConfig&) const = default;
};

// Two-tower encoder/decoder: per level two (conv3x3 + ReLU), 2x2 max-pool
// down; a bottleneck at 2x the deepest width; per level nearest 2x upsample
// + conv3x3 + ReLU, concatenation with the matching encoder skip, then two
// (conv3x3 + ReLU); a 1x1 head to one channel.
template <class T>
class UNet {
public:
    using NodeId = typename Graph<T>::NodeId;

    struct Output {
        NodeId logits;  // head output before the final activation
        NodeId output;
    };

    explicit UNet(UNetConfig config, std::uint64_t init_seed = 0);

    const UNetConfig& config() const { return config_; }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }

    // Frozen forward: gradients may flow to the input, never to parameters.
    Output forward(Graph<T>& graph, NodeId input) const;
    // Trainable forward: backward accumulates into params().grad.
    Output forward_train(Graph<T>& graph, NodeId input);

    // Single-image convenience inference; thread-safe on a shared instance.
    Tensor<T> predict(const Tensor<T>& input) const;

    // Replaces the skip tensor at `level` by zeros (wiring diagnostics).
    void set_skip_enabled(int level, bool enabled);

    void check_input(const Tensor<T>& input) const;

private:
    struct ConvIds {
        int weight;
        int bias;
    };
    struct Level {
        ConvIds enc1, enc2;
        ConvIds up, dec1, dec2;
    };

    Output build(Graph<T>& graph, NodeId input, bool train);
    ConvIds add_conv(const std::string& name, int in, int out, int k);
    NodeId conv(Graph<T>& graph, NodeId x, ConvIds ids, int pad, bool train);

    UNetConfig config_;
    ParamStore<T> params_;
    std::vector<Level> levels_;
    ConvIds bottleneck1_{}, bottleneck2_{}, head_{};
    std::vector<bool> skip_enabled_;
};

extern template class UNet<float>;
extern template class UNet<double>;

}  // namespace oct

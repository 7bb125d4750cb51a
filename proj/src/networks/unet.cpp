#include "oct/unet.hpp"

#include "oct/error.hpp"

namespace oct {

const char* to_string(FinalActivation act) {
    return act == FinalActivation::sigmoid ? "sigmoid" : "minmax_scale";
}

FinalActivation final_activation_from_string(const std::string& name) {
    if (name == "sigmoid") return FinalActivation::sigmoid;
    if (name == "minmax_scale") return FinalActivation::minmax_scale;
    throw ConfigError("unknown final activation '" + name + "'");
}

UNetConfig UNetConfig::with_base(int base_channels, int depth, FinalActivation act) {
    UNetConfig cfg;
    cfg.base_channels = base_channels;
    cfg.depth = depth;
    cfg.channel_schedule.clear();
    for (int l = 0; l < depth; ++l) cfg.channel_schedule.push_back(base_channels << l);
    cfg.final_activation = act;
    return cfg;
}

void UNetConfig::validate() const {
    if (in_channels < 1) throw ConfigError("UNet needs at least one input channel");
    if (depth < 1) throw ConfigError("UNet depth must be at least 1");
    if (static_cast<int>(channel_schedule.size()) != depth)
        throw ConfigError("channel schedule length must equal depth");
    if (channel_schedule.front() != base_channels) throw ConfigError("channel schedule must start at base_channels");
    for (int l = 1; l < depth; ++l)
        if (channel_schedule[l] != 2 * channel_schedule[l - 1])
            throw ConfigError("channel schedule must double per level");
    if (conv_kernel != 3 || conv_stride != 1 || pool_kernel != 2)
        throw ConfigError("only 3x3 stride-1 convolutions with 2x2 pooling are supported");
}

template <class T>
UNet<T>::UNet(UNetConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
    config_.validate();
    const auto& s = config_.channel_schedule;
    const int k = config_.conv_kernel;
    levels_.resize(config_.depth);
    for (int l = 0; l < config_.depth; ++l) {
        const int in = l == 0 ? config_.in_channels : s[l - 1];
        const std::string p = "enc" + std::to_string(l);
        levels_[l].enc1 = add_conv(p + ".conv1", in, s[l], k);
        levels_[l].enc2 = add_conv(p + ".conv2", s[l], s[l], k);
    }
    const int deepest = s.back();
    bottleneck1_ = add_conv("bottleneck.conv1", deepest, 2 * deepest, k);
    bottleneck2_ = add_conv("bottleneck.conv2", 2 * deepest, 2 * deepest, k);
    for (int l = config_.depth - 1; l >= 0; --l) {
        const int prev = l == config_.depth - 1 ? 2 * deepest : s[l + 1];
        const std::string p = "dec" + std::to_string(l);
        levels_[l].up = add_conv(p + ".up", prev, s[l], k);
        levels_[l].dec1 = add_conv(p + ".conv1", 2 * s[l], s[l], k);
        levels_[l].dec2 = add_conv(p + ".conv2", s[l], s[l], k);
    }
    head_ = add_conv("head", s.front(), 1, 1);
    skip_enabled_.assign(config_.depth, true);
    std::mt19937_64 rng(init_seed);
    params_.kaiming_init(rng);
}

template <class T>
typename UNet<T>::ConvIds UNet<T>::add_conv(const std::string& name, int in, int out, int k) {
    return ConvIds{params_.add(name + ".weight", {out, in, k, k}), params_.add(name + ".bias", {out})};
}

template <class T>
typename UNet<T>::NodeId UNet<T>::conv(Graph<T>& graph, NodeId x, ConvIds ids, int pad, bool train) {
    Param<T>& w = params_[ids.weight];
    Param<T>& b = params_[ids.bias];
    return graph.conv2d(x, w, b, 1, pad, train ? &w : nullptr, train ? &b : nullptr);
}

template <class T>
void UNet<T>::check_input(const Tensor<T>& input) const {
    if (input.channels != config_.in_channels)
        throw ArgumentError("UNet expects " + std::to_string(config_.in_channels) + " input channel(s)");
    const int d = config_.size_divisor();
    if (input.height % d != 0 || input.width % d != 0 || input.height == 0 || input.width == 0)
        throw ArgumentError("UNet input " + std::to_string(input.height) + "x" + std::to_string(input.width) +
                            " is not divisible by " + std::to_string(d) + "; resize the image first");
}

template <class T>
typename UNet<T>::Output UNet<T>::build(Graph<T>& graph, NodeId input, bool train) {
    check_input(graph.value(input));
    const int pad = config_.conv_kernel / 2;
    std::vector<NodeId> skips(config_.depth);
    NodeId x = input;
    for (int l = 0; l < config_.depth; ++l) {
        x = graph.relu(conv(graph, x, levels_[l].enc1, pad, train));
        x = graph.relu(conv(graph, x, levels_[l].enc2, pad, train));
        skips[l] = x;
        x = graph.maxpool2(x);
    }
    x = graph.relu(conv(graph, x, bottleneck1_, pad, train));
    x = graph.relu(conv(graph, x, bottleneck2_, pad, train));
    for (int l = config_.depth - 1; l >= 0; --l) {
        x = graph.upsample2(x);
        x = graph.relu(conv(graph, x, levels_[l].up, pad, train));
        const NodeId skip = skip_enabled_[l] ? skips[l] : graph.scale(skips[l], T(0));
        x = graph.concat(skip, x);
        x = graph.relu(conv(graph, x, levels_[l].dec1, pad, train));
        x = graph.relu(conv(graph, x, levels_[l].dec2, pad, train));
    }
    const NodeId logits = conv(graph, x, head_, 0, train);
    const NodeId out = config_.final_activation == FinalActivation::sigmoid ? graph.sigmoid(logits)
                                                                           : graph.min_max_scale(logits);
    return Output{logits, out};
}

template <class T>
typename UNet<T>::Output UNet<T>::forward(Graph<T>& graph, NodeId input) const {
    // build(train=false) reads parameters only.
    return const_cast<UNet&>(*this).build(graph, input, false);
}

template <class T>
typename UNet<T>::Output UNet<T>::forward_train(Graph<T>& graph, NodeId input) {
    return build(graph, input, true);
}

template <class T>
Tensor<T> UNet<T>::predict(const Tensor<T>& input) const {
    Graph<T> graph;
    const NodeId x = graph.input(input);
    return graph.value(forward(graph, x).output);
}

template <class T>
void UNet<T>::set_skip_enabled(int level, bool enabled) {
    if (level < 0 || level >= config_.depth) throw ArgumentError("skip level out of range");
    skip_enabled_[level] = enabled;
}

template class UNet<float>;
template class UNet<double>;

}  // namespace oct

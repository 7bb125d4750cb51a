#include "oct/extractor.hpp"

#include "oct/checkpoint.hpp"
#include "oct/error.hpp"
#include "oct/seed.hpp"

namespace oct {
namespace {

int out_dim(int in, int k, int stride) { return (in + 2 * (k / 2) - k) / stride + 1; }

struct ResidualLayout {
    int stem;
    std::array<int, 8> widths;
    std::array<int, 8> strides;
};

// Widths differ between the two residual networks so their features are
// not redundant; strides follow the four-stage ResNet pattern.
const ResidualLayout kWideResidual{16, {16, 16, 24, 24, 32, 32, 48, 48}, {1, 1, 2, 1, 2, 1, 2, 1}};
const ResidualLayout kGroupedResidual{12, {12, 12, 24, 24, 40, 40, 56, 56}, {1, 1, 2, 1, 2, 1, 2, 1}};

// ImageNet channel statistics.
constexpr std::array<double, 3> kMean = {0.485, 0.456, 0.406};
constexpr std::array<double, 3> kStd = {0.229, 0.224, 0.225};

}  // namespace

const char* to_string(WeightsSource source) {
    return source == WeightsSource::frozen_random ? "frozen_random" : "imagenet_pretrained";
}

WeightsSource weights_source_from_string(const std::string& name) {
    if (name == "frozen_random") return WeightsSource::frozen_random;
    if (name == "imagenet_pretrained" || name == "pretrained") return WeightsSource::imagenet_pretrained;
    throw ConfigError("unknown extractor weights source '" + name + "'");
}

FeatureExtractorSpec FeatureExtractorSpec::named(const std::string& name, WeightsSource source,
                                                 std::filesystem::path weights_dir) {
    FeatureExtractorSpec spec;
    spec.name = name;
    spec.weights_source = source;
    spec.weights_dir = std::move(weights_dir);
    if (name == "wide_resnet101_2" || name == "resnext101_32x8d") {
        spec.tap_points = {"block2", "block4", "block6", "block8"};
    } else if (name == "efficientnet_b4") {
        spec.tap_points = {"final_conv"};
    } else if (name == "toy") {
        spec.tap_points = {"conv1"};
    } else {
        throw ConfigError("unknown feature extractor '" + name + "'");
    }
    return spec;
}

template <class T>
FeatureExtractor<T>::FeatureExtractor(FeatureExtractorSpec spec) : spec_(std::move(spec)) {
    build_topology();
    for (const auto& tap : spec_.tap_points) {
        const bool known = std::any_of(stages_.begin(), stages_.end(), [&](const Stage& s) { return s.tap == tap; });
        if (!known) throw ConfigError("extractor '" + spec_.name + "' has no tap point '" + tap + "'");
    }
    if (spec_.weights_source == WeightsSource::frozen_random) {
        std::mt19937_64 rng(splitmix64(spec_.seed ^ fnv1a(spec_.name)));
        params_.kaiming_init(rng);
        return;
    }
    const auto path = spec_.weights_dir / (spec_.name + ".params");
    if (!std::filesystem::exists(path))
        throw ConfigError("pretrained weights for extractor '" + spec_.name + "' not found at " + path.string() +
                          "; fetch and convert them into that file, or set extractors.weights = frozen_random");
    ParamStore<float> loaded = params_.template cast<float>();
    read_params(loaded, path);
    params_ = loaded.template cast<T>();
}

template <class T>
typename FeatureExtractor<T>::Conv FeatureExtractor<T>::add_conv(const std::string& name, int in, int out, int k,
                                                                int stride) {
    Conv c;
    c.weight = params_.add(name + ".weight", {out, in, k, k});
    c.bias = params_.add(name + ".bias", {out});
    c.stride = stride;
    c.kernel = k;
    return c;
}

template <class T>
void FeatureExtractor<T>::build_topology() {
    const std::string& name = spec_.name;
    auto plain = [&](const std::string& id, int in, int out, int k, int stride, std::string tap = {}) {
        Stage s;
        s.conv = add_conv(id, in, out, k, stride);
        s.out_channels = out;
        s.tap = std::move(tap);
        stages_.push_back(std::move(s));
        return out;
    };
    if (name == "toy") {
        plain("conv1", 3, 2, 3, 1, "conv1");
    } else if (name == "efficientnet_b4") {
        int c = plain("stem", 3, 12, 3, 2);
        c = plain("stage1", c, 16, 3, 1);
        c = plain("stage2", c, 24, 3, 2);
        c = plain("stage3", c, 40, 3, 2);
        c = plain("stage4", c, 64, 3, 2);
        plain("final_conv", c, 96, 1, 1, "final_conv");
    } else if (name == "wide_resnet101_2" || name == "resnext101_32x8d") {
        const ResidualLayout& layout = name == "wide_resnet101_2" ? kWideResidual : kGroupedResidual;
        int c = plain("stem", 3, layout.stem, 3, 2);
        for (int b = 0; b < 8; ++b) {
            const std::string id = "block" + std::to_string(b + 1);
            Stage s;
            s.residual = true;
            s.block.conv1 = add_conv(id + ".conv1", c, layout.widths[b], 3, layout.strides[b]);
            s.block.conv2 = add_conv(id + ".conv2", layout.widths[b], layout.widths[b], 3, 1);
            if (layout.strides[b] != 1 || c != layout.widths[b])
                s.block.shortcut = add_conv(id + ".shortcut", c, layout.widths[b], 1, layout.strides[b]);
            s.block.out_channels = layout.widths[b];
            s.out_channels = layout.widths[b];
            if ((b + 1) % 2 == 0) s.tap = id;
            stages_.push_back(std::move(s));
            c = layout.widths[b];
        }
    } else {
        throw ConfigError("unknown feature extractor '" + name + "'");
    }
}

template <class T>
typename FeatureExtractor<T>::NodeId FeatureExtractor<T>::apply(Graph<T>& graph, NodeId x, const Conv& c) const {
    return graph.conv2d(x, params_[c.weight], params_[c.bias], c.stride, c.kernel / 2);
}

template <class T>
std::vector<typename FeatureExtractor<T>::NodeId> FeatureExtractor<T>::features(Graph<T>& graph, NodeId image) const {
    std::array<T, 3> mean{}, stddev{};
    for (int c = 0; c < 3; ++c) {
        mean[c] = static_cast<T>(kMean[c]);
        stddev[c] = static_cast<T>(kStd[c]);
    }
    NodeId x = graph.gray_to_rgb(image, mean, stddev);
    std::vector<NodeId> taps(spec_.tap_points.size(), -1);
    for (const Stage& s : stages_) {
        if (s.residual) {
            NodeId h = graph.relu(apply(graph, x, s.block.conv1));
            h = apply(graph, h, s.block.conv2);
            const NodeId shortcut = s.block.shortcut.weight >= 0 ? apply(graph, x, s.block.shortcut) : x;
            x = graph.relu(graph.add(h, shortcut));
        } else {
            x = graph.relu(apply(graph, x, s.conv));
        }
        for (std::size_t t = 0; t < spec_.tap_points.size(); ++t)
            if (spec_.tap_points[t] == s.tap) taps[t] = x;
        if (std::none_of(taps.begin(), taps.end(), [](NodeId id) { return id < 0; })) break;
    }
    return taps;
}

template <class T>
std::vector<Tensor<T>> FeatureExtractor<T>::extract(const Tensor<T>& image) const {
    Graph<T> graph;
    const NodeId x = graph.input(image);
    std::vector<Tensor<T>> out;
    for (NodeId id : features(graph, x)) out.push_back(graph.value(id));
    return out;
}

template <class T>
std::vector<TensorShape> FeatureExtractor<T>::tap_shapes(int height, int width) const {
    std::vector<TensorShape> shapes(spec_.tap_points.size());
    int h = height;
    int w = width;
    for (const Stage& s : stages_) {
        const Conv& c = s.residual ? s.block.conv1 : s.conv;
        h = out_dim(h, c.kernel, c.stride);
        w = out_dim(w, c.kernel, c.stride);
        for (std::size_t t = 0; t < spec_.tap_points.size(); ++t)
            if (spec_.tap_points[t] == s.tap) shapes[t] = TensorShape{s.out_channels, h, w};
    }
    return shapes;
}

template <class T>
template <class U>
FeatureExtractor<U> FeatureExtractor<T>::cast() const {
    FeatureExtractorSpec spec = spec_;
    spec.weights_source = WeightsSource::frozen_random;
    FeatureExtractor<U> out(spec);
    out.spec_ = spec_;
    out.params_ = params_.template cast<U>();
    return out;
}

template class FeatureExtractor<float>;
template class FeatureExtractor<double>;
template FeatureExtractor<double> FeatureExtractor<float>::cast<double>() const;
template FeatureExtractor<float> FeatureExtractor<double>::cast<float>() const;

std::vector<Tensor<float>> extract_features(const BScan& image, const FeatureExtractor<float>& extractor) {
    return extractor.extract(to_tensor<float>(image.image()));
}

}  // namespace oct

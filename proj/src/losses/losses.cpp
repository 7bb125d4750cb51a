#include "oct/losses.hpp"

#include "oct/error.hpp"

namespace oct {

void LossWeights::validate() const {
    if (content.size() != style.size()) throw ConfigError("content and style weight counts differ");
    for (double w : content)
        if (!(w > 0.0)) throw ConfigError("content weights must be positive");
    for (double k : style)
        if (!(k > 0.0)) throw ConfigError("style weights must be positive");
}

double shadow_loss(const ShadowMask& pred, const ShadowMask& gt) {
    if (!pred.values().same_shape(gt.values())) throw ArgumentError("shadow_loss: mask shapes differ");
    const double denom = gt.sum();
    if (!(denom > 0.0)) throw DegenerateError("shadow_loss: ground-truth mask is empty");
    return pred.sum() / denom;
}

template <class T>
T shadow_loss(const Tensor<T>& pred, const Tensor<T>& gt, Tensor<T>* grad_pred) {
    if (!pred.same_shape(gt)) throw ArgumentError("shadow_loss: tensor shapes differ");
    double num = 0.0;
    double denom = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        num += pred.data[i];
        denom += gt.data[i];
    }
    if (!(denom > 0.0)) throw DegenerateError("shadow_loss: ground-truth mask is empty");
    if (grad_pred) *grad_pred = Tensor<T>(pred.channels, pred.height, pred.width, static_cast<T>(1.0 / denom));
    return static_cast<T>(num / denom);
}

BScan mask_out_shadows(const BScan& image, const ShadowMask& gt) {
    if (!image.image().same_shape(gt.values())) throw ArgumentError("mask_out_shadows: shapes differ");
    if (!gt.binary()) throw ArgumentError("mask_out_shadows needs a binary mask");
    Image out = image.image();
    auto px = out.pixels();
    auto m = gt.values().pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        if (m[i] == 1.0f) px[i] = 0.0f;
    return BScan(std::move(out), image.id(), image.kind());
}

template <class T>
Tensor<T> shadow_keep_map(const ShadowMask& gt) {
    if (!gt.binary()) throw ArgumentError("shadow_keep_map needs a binary mask");
    Tensor<T> keep(1, gt.height(), gt.width());
    auto m = gt.values().pixels();
    for (std::size_t i = 0; i < m.size(); ++i) keep.data[i] = m[i] == 1.0f ? T(0) : T(1);
    return keep;
}

namespace {

template <class T>
void check_aligned(std::span<const Tensor<T>> a, std::span<const Tensor<T>> b, const char* what) {
    if (a.size() != b.size()) throw ArgumentError(std::string(what) + ": tap counts differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].same_shape(b[i])) throw ArgumentError(std::string(what) + ": feature shapes differ at tap " +
                                                        std::to_string(i));
}

template <class T>
using ConstFeatureMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using FeatureMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

template <class T>
T content_loss(std::span<const Tensor<T>> feats_d, std::span<const Tensor<T>> feats_c,
               std::vector<Tensor<T>>* grad_d) {
    check_aligned(feats_d, feats_c, "content_loss");
    if (grad_d) grad_d->clear();
    double total = 0.0;
    for (std::size_t i = 0; i < feats_d.size(); ++i) {
        const auto& d = feats_d[i];
        const auto& c = feats_c[i];
        const double n = static_cast<double>(d.size());
        double sq = 0.0;
        for (std::size_t j = 0; j < d.data.size(); ++j) {
            const double diff = static_cast<double>(d.data[j]) - static_cast<double>(c.data[j]);
            sq += diff * diff;
        }
        total += sq / n;
        if (grad_d) {
            Tensor<T> g(d.channels, d.height, d.width);
            const T scale = static_cast<T>(2.0 / n);
            for (std::size_t j = 0; j < d.data.size(); ++j) g.data[j] = scale * (d.data[j] - c.data[j]);
            grad_d->push_back(std::move(g));
        }
    }
    return static_cast<T>(total);
}

template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> gram(const Tensor<T>& feature) {
    ConstFeatureMap<T> f(feature.data.data(), feature.channels, static_cast<Eigen::Index>(feature.plane()));
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> g = f * f.transpose();
    return g;
}

template <class T>
T style_loss(std::span<const Tensor<T>> feats_d, std::span<const Tensor<T>> feats_c,
             std::vector<Tensor<T>>* grad_d) {
    check_aligned(feats_d, feats_c, "style_loss");
    if (grad_d) grad_d->clear();
    double total = 0.0;
    for (std::size_t i = 0; i < feats_d.size(); ++i) {
        const auto& d = feats_d[i];
        const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> diff = gram(d) - gram(feats_c[i]);
        total += diff.template cast<double>().squaredNorm();
        if (grad_d) {
            // d/dF ||F F^T - G_c||^2 = 4 (F F^T - G_c) F for symmetric G_c
            Tensor<T> g(d.channels, d.height, d.width);
            ConstFeatureMap<T> f(d.data.data(), d.channels, static_cast<Eigen::Index>(d.plane()));
            FeatureMap<T> gm(g.data.data(), d.channels, static_cast<Eigen::Index>(d.plane()));
            gm.noalias() = T(4) * diff * f;
            grad_d->push_back(std::move(g));
        }
    }
    return static_cast<T>(total);
}

double total_loss(std::span<const double> content, std::span<const double> style, double shadow,
                  const LossWeights& weights) {
    if (content.size() != weights.content.size() || style.size() != weights.style.size())
        throw ConfigError("total_loss: " + std::to_string(content.size()) + " content / " +
                          std::to_string(style.size()) + " style terms for " +
                          std::to_string(weights.content.size()) + " weights");
    double total = 0.0;
    for (std::size_t j = 0; j < content.size(); ++j)
        total += weights.content[j] * content[j] + weights.style[j] * style[j];
    return total + shadow;
}

template float shadow_loss<float>(const Tensor<float>&, const Tensor<float>&, Tensor<float>*);
template double shadow_loss<double>(const Tensor<double>&, const Tensor<double>&, Tensor<double>*);
template Tensor<float> shadow_keep_map<float>(const ShadowMask&);
template Tensor<double> shadow_keep_map<double>(const ShadowMask&);
template float content_loss<float>(std::span<const Tensor<float>>, std::span<const Tensor<float>>,
                                   std::vector<Tensor<float>>*);
template double content_loss<double>(std::span<const Tensor<double>>, std::span<const Tensor<double>>,
                                     std::vector<Tensor<double>>*);
template Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic> gram<float>(const Tensor<float>&);
template Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> gram<double>(const Tensor<double>&);
template float style_loss<float>(std::span<const Tensor<float>>, std::span<const Tensor<float>>,
                                 std::vector<Tensor<float>>*);
template double style_loss<double>(std::span<const Tensor<double>>, std::span<const Tensor<double>>,
                                   std::vector<Tensor<double>>*);

}  // namespace oct

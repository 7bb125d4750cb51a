#include "oct/graph.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace oct {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

int out_dim(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// cols[(c*k*k + ki*k + kj), oy*wo + ox] = x[c, oy*s - pad + ki, ox*s - pad + kj]
template <class T>
void im2col(const Tensor<T>& x, int k, int stride, int pad, int ho, int wo, AlignedVector<T>& cols) {
    const std::size_t positions = static_cast<std::size_t>(ho) * wo;
    cols.assign(static_cast<std::size_t>(x.channels) * k * k * positions, T(0));
    for (int c = 0; c < x.channels; ++c) {
        const T* src = x.data.data() + c * x.plane();
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                T* dst = cols.data() + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * positions;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= x.height) continue;
                    const T* row = src + static_cast<std::size_t>(iy) * x.width;
                    T* out = dst + static_cast<std::size_t>(oy) * wo;
                    if (stride == 1) {
                        const int lo = std::max(0, pad - kj);
                        const int hi = std::min(wo, x.width + pad - kj);
                        for (int ox = lo; ox < hi; ++ox) out[ox] = row[ox - pad + kj];
                    } else {
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride - pad + kj;
                            if (ix >= 0 && ix < x.width) out[ox] = row[ix];
                        }
                    }
                }
            }
        }
    }
}

template <class T>
void col2im(const AlignedVector<T>& cols, int k, int stride, int pad, int ho, int wo, Tensor<T>& dx) {
    const std::size_t positions = static_cast<std::size_t>(ho) * wo;
    for (int c = 0; c < dx.channels; ++c) {
        T* dst = dx.data.data() + c * dx.plane();
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const T* src = cols.data() + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * positions;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= dx.height) continue;
                    T* row = dst + static_cast<std::size_t>(iy) * dx.width;
                    const T* in = src + static_cast<std::size_t>(oy) * wo;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kj;
                        if (ix >= 0 && ix < dx.width) row[ix] += in[ox];
                    }
                }
            }
        }
    }
}

template <class T>
void accumulate(Tensor<T>& into, const Tensor<T>& from) {
    for (std::size_t i = 0; i < into.data.size(); ++i) into.data[i] += from.data[i];
}

}  // namespace

template <class T>
typename Graph<T>::NodeId Graph<T>::push(Tensor<T> value, bool requires_grad, std::function<void(Graph&)> fn) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    if (requires_grad) node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

template <class T>
Tensor<T>& Graph<T>::grad_of(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.channels, n.value.height, n.value.width);
    return n.grad;
}

template <class T>
typename Graph<T>::NodeId Graph<T>::input(Tensor<T> value, bool requires_grad) {
    return push(std::move(value), requires_grad, [](Graph&) {});
}

template <class T>
typename Graph<T>::NodeId Graph<T>::conv2d(NodeId x, const Param<T>& weight, const Param<T>& bias, int stride,
                                           int pad, Param<T>* weight_grad, Param<T>* bias_grad) {
    const Tensor<T>& in = nodes_[x].value;
    const int out_ch = weight.shape.at(0);
    const int in_ch = weight.shape.at(1);
    const int k = weight.shape.at(2);
    if (in_ch != in.channels) throw ArgumentError("conv2d: input has " + std::to_string(in.channels) +
                                                  " channels, weight expects " + std::to_string(in_ch));
    const int ho = out_dim(in.height, k, stride, pad);
    const int wo = out_dim(in.width, k, stride, pad);
    if (ho <= 0 || wo <= 0) throw ArgumentError("conv2d: input too small for kernel");
    const std::size_t positions = static_cast<std::size_t>(ho) * wo;
    const bool direct = (k == 1 && stride == 1 && pad == 0);

    Tensor<T> out(out_ch, ho, wo);
    ConstMapMat<T> w(weight.value.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k);
    MapMat<T> y(out.data.data(), out_ch, positions);
    if (direct) {
        ConstMapMat<T> cols(in.data.data(), in_ch, positions);
        y.noalias() = w * cols;
    } else {
        AlignedVector<T> cols;
        im2col(in, k, stride, pad, ho, wo, cols);
        y.noalias() = w * ConstMapMat<T>(cols.data(), static_cast<Eigen::Index>(in_ch) * k * k, positions);
    }
    for (int o = 0; o < out_ch; ++o) y.row(o).array() += bias.value[o];

    const bool train_params = weight_grad != nullptr && bias_grad != nullptr;
    const bool needs = nodes_[x].requires_grad || train_params;
    const Param<T>* wp = &weight;
    Param<T>* gw = weight_grad;
    Param<T>* gb = bias_grad;
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), needs, [=](Graph& g) {
        const Tensor<T>& input = g.nodes_[x].value;
        const Tensor<T>& dy_t = g.nodes_[self].grad;
        ConstMapMat<T> dy(dy_t.data.data(), out_ch, positions);
        ConstMapMat<T> wm(wp->value.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k);
        AlignedVector<T> cols;
        if (train_params) {
            if (!direct) im2col(input, k, stride, pad, ho, wo, cols);
            MapMat<T> dw(gw->grad.data(), out_ch, static_cast<Eigen::Index>(in_ch) * k * k);
            if (direct) dw.noalias() += dy * ConstMapMat<T>(input.data.data(), in_ch, positions).transpose();
            else dw.noalias() += dy * ConstMapMat<T>(cols.data(), static_cast<Eigen::Index>(in_ch) * k * k, positions).transpose();
            for (int o = 0; o < out_ch; ++o) gb->grad[o] += dy.row(o).sum();
        }
        if (g.nodes_[x].requires_grad) {
            Tensor<T>& dx = g.grad_of(x);
            if (direct) {
                MapMat<T> dxm(dx.data.data(), in_ch, positions);
                dxm.noalias() += wm.transpose() * dy;
            } else {
                cols.resize(static_cast<std::size_t>(in_ch) * k * k * positions);
                MapMat<T> dcols(cols.data(), static_cast<Eigen::Index>(in_ch) * k * k, positions);
                dcols.noalias() = wm.transpose() * dy;
                col2im(cols, k, stride, pad, ho, wo, dx);
            }
        }
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::relu(NodeId x) {
    Tensor<T> out = nodes_[x].value;
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=](Graph& g) {
        const Tensor<T>& y = g.nodes_[self].value;
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        for (std::size_t i = 0; i < dy.data.size(); ++i)
            if (y.data[i] > T(0)) dx.data[i] += dy.data[i];
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::sigmoid(NodeId x) {
    Tensor<T> out = nodes_[x].value;
    for (T& v : out.data) v = T(1) / (T(1) + std::exp(-v));
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=](Graph& g) {
        const Tensor<T>& y = g.nodes_[self].value;
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[i] += dy.data[i] * y.data[i] * (T(1) - y.data[i]);
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::maxpool2(NodeId x) {
    const Tensor<T>& in = nodes_[x].value;
    if (in.height % 2 != 0 || in.width % 2 != 0) throw ArgumentError("maxpool2 needs even spatial dimensions");
    Tensor<T> out(in.channels, in.height / 2, in.width / 2);
    std::vector<int> argmax(out.size());
    for (int c = 0; c < in.channels; ++c) {
        for (int r = 0; r < out.height; ++r) {
            for (int col = 0; col < out.width; ++col) {
                int best = -1;
                T best_v = -std::numeric_limits<T>::infinity();
                for (int dr = 0; dr < 2; ++dr) {
                    for (int dc = 0; dc < 2; ++dc) {
                        const int idx = (c * in.height + 2 * r + dr) * in.width + 2 * col + dc;
                        if (in.data[idx] > best_v || best < 0) {
                            best_v = in.data[idx];
                            best = idx;
                        }
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(c) * out.height + r) * out.width + col;
                out.data[o] = best_v;
                argmax[o] = best;
            }
        }
    }
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=, argmax = std::move(argmax)](Graph& g) {
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[argmax[i]] += dy.data[i];
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::upsample2(NodeId x) {
    const Tensor<T>& in = nodes_[x].value;
    Tensor<T> out(in.channels, in.height * 2, in.width * 2);
    for (int c = 0; c < in.channels; ++c)
        for (int r = 0; r < out.height; ++r)
            for (int col = 0; col < out.width; ++col) out.at(c, r, col) = in.at(c, r / 2, col / 2);
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=](Graph& g) {
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        for (int c = 0; c < dy.channels; ++c)
            for (int r = 0; r < dy.height; ++r)
                for (int col = 0; col < dy.width; ++col) dx.at(c, r / 2, col / 2) += dy.at(c, r, col);
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::concat(NodeId a, NodeId b) {
    const Tensor<T>& ta = nodes_[a].value;
    const Tensor<T>& tb = nodes_[b].value;
    if (ta.height != tb.height || ta.width != tb.width) throw ArgumentError("concat: spatial shapes differ");
    Tensor<T> out(ta.channels + tb.channels, ta.height, ta.width);
    std::copy(ta.data.begin(), ta.data.end(), out.data.begin());
    std::copy(tb.data.begin(), tb.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(ta.size()));
    const std::size_t split = ta.size();
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[a].requires_grad || nodes_[b].requires_grad, [=](Graph& g) {
        const Tensor<T>& dy = g.nodes_[self].grad;
        if (g.nodes_[a].requires_grad) {
            Tensor<T>& da = g.grad_of(a);
            for (std::size_t i = 0; i < split; ++i) da.data[i] += dy.data[i];
        }
        if (g.nodes_[b].requires_grad) {
            Tensor<T>& db = g.grad_of(b);
            for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] += dy.data[split + i];
        }
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::add(NodeId a, NodeId b) {
    if (!nodes_[a].value.same_shape(nodes_[b].value)) throw ArgumentError("add: shapes differ");
    Tensor<T> out = nodes_[a].value;
    accumulate(out, nodes_[b].value);
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[a].requires_grad || nodes_[b].requires_grad, [=](Graph& g) {
        const Tensor<T>& dy = g.nodes_[self].grad;
        if (g.nodes_[a].requires_grad) accumulate(g.grad_of(a), dy);
        if (g.nodes_[b].requires_grad) accumulate(g.grad_of(b), dy);
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::scale(NodeId x, T factor) {
    Tensor<T> out = nodes_[x].value;
    for (T& v : out.data) v *= factor;
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=](Graph& g) {
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[i] += factor * dy.data[i];
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::multiply(NodeId x, const Tensor<T>& factor) {
    if (!nodes_[x].value.same_shape(factor)) throw ArgumentError("multiply: shapes differ");
    Tensor<T> out = nodes_[x].value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= factor.data[i];
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=](Graph& g) {
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[i] += factor.data[i] * dy.data[i];
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::min_max_scale(NodeId x) {
    const Tensor<T>& in = nodes_[x].value;
    Tensor<T> out(in.channels, in.height, in.width);
    if (in.data.empty()) return push(std::move(out), false, {});
    const auto [lo_it, hi_it] = std::minmax_element(in.data.begin(), in.data.end());
    const std::size_t lo_idx = static_cast<std::size_t>(lo_it - in.data.begin());
    const std::size_t hi_idx = static_cast<std::size_t>(hi_it - in.data.begin());
    const T lo = *lo_it;
    const T range = *hi_it - lo;
    if (range > T(0))
        for (std::size_t i = 0; i < in.data.size(); ++i) out.data[i] = (in.data[i] - lo) / range;
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=](Graph& g) {
        if (!(range > T(0))) return;
        const Tensor<T>& y = g.nodes_[self].value;
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        // y_i = (x_i - m) / (M - m):  dy_i/dm = (y_i - 1) / R,  dy_i/dM = -y_i / R
        T to_min = T(0);
        T to_max = T(0);
        for (std::size_t i = 0; i < dy.data.size(); ++i) {
            dx.data[i] += dy.data[i] / range;
            to_min += dy.data[i] * (y.data[i] - T(1)) / range;
            to_max -= dy.data[i] * y.data[i] / range;
        }
        dx.data[lo_idx] += to_min;
        dx.data[hi_idx] += to_max;
    });
}

template <class T>
typename Graph<T>::NodeId Graph<T>::gray_to_rgb(NodeId x, const std::array<T, 3>& mean,
                                                const std::array<T, 3>& stddev) {
    const Tensor<T>& in = nodes_[x].value;
    if (in.channels != 1) throw ArgumentError("gray_to_rgb expects a single-channel input");
    Tensor<T> out(3, in.height, in.width);
    for (int c = 0; c < 3; ++c) {
        auto dst = out.channel(c);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (in.data[i] - mean[c]) / stddev[c];
    }
    const NodeId self = static_cast<NodeId>(nodes_.size());
    return push(std::move(out), nodes_[x].requires_grad, [=](Graph& g) {
        const Tensor<T>& dy = g.nodes_[self].grad;
        Tensor<T>& dx = g.grad_of(x);
        for (int c = 0; c < 3; ++c) {
            auto src = dy.channel(c);
            for (std::size_t i = 0; i < src.size(); ++i) dx.data[i] += src[i] / stddev[c];
        }
    });
}

template <class T>
void Graph<T>::backward(std::span<const std::pair<NodeId, Tensor<T>>> seeds) {
    if (backward_done_) throw ArgumentError("graph backward may run only once");
    backward_done_ = true;
    NodeId last = -1;
    for (const auto& [id, seed] : seeds) {
        if (!nodes_[id].value.same_shape(seed)) throw ArgumentError("backward seed shape mismatch");
        if (!nodes_[id].requires_grad) continue;
        accumulate(grad_of(id), seed);
        last = std::max(last, id);
    }
    for (NodeId id = last; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.requires_grad && !n.grad.empty() && n.backward) n.backward(*this);
    }
}

template <class T>
void Graph<T>::backward(NodeId id, Tensor<T> seed) {
    std::pair<NodeId, Tensor<T>> one{id, std::move(seed)};
    backward(std::span<const std::pair<NodeId, Tensor<T>>>(&one, 1));
}

template class Graph<float>;
template class Graph<double>;

}  // namespace oct

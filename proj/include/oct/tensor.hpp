#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "oct/error.hpp"
#include "oct/image.hpp"

namespace oct {

// 64-byte aligned storage. Eigen's vectorized kernels peel differently
// depending on buffer alignment, so a fixed alignment keeps sums bitwise
// reproducible from run to run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, alignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense C x H x W activation. One sample at a time; batches are loops.
template <class T>
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    AlignedVector<T> data;

    Tensor() = default;
    Tensor(int c, int h, int w, T fill = T(0))
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    bool empty() const { return data.empty(); }
    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    T& at(int c, int r, int col) { return data[(static_cast<std::size_t>(c) * height + r) * width + col]; }
    T at(int c, int r, int col) const { return data[(static_cast<std::size_t>(c) * height + r) * width + col]; }

    std::span<T> channel(int c) { return std::span<T>(data).subspan(c * plane(), plane()); }
    std::span<const T> channel(int c) const { return std::span<const T>(data).subspan(c * plane(), plane()); }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(channels, height, width);
        std::transform(data.begin(), data.end(), out.data.begin(), [](T v) { return static_cast<U>(v); });
        return out;
    }

    bool operator==(const Tensor&) const = default;
};

template <class T>
Tensor<T> to_tensor(const Image& image) {
    Tensor<T> t(1, image.height(), image.width());
    auto px = image.pixels();
    std::transform(px.begin(), px.end(), t.data.begin(), [](float v) { return static_cast<T>(v); });
    return t;
}

template <class T>
Image to_image(const Tensor<T>& t, int channel = 0) {
    if (channel >= t.channels) throw ArgumentError("tensor channel out of range");
    Image out(t.height, t.width);
    auto src = t.channel(channel);
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]);
    return out;
}

struct TensorShape {
    int channels = 0;
    int height = 0;
    int width = 0;
    bool operator==(const TensorShape&) const = default;
};

}  // namespace oct

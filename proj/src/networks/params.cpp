#include "oct/params.hpp"

#include <cmath>
#include <numeric>

#include "oct/seed.hpp"

namespace oct {

template <class T>
int ParamStore<T>::add(std::string name, std::vector<int> shape) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                          [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    Param<T> p;
    p.name = std::move(name);
    p.shape = std::move(shape);
    p.value.assign(n, T(0));
    p.grad.assign(n, T(0));
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size() - 1);
}

template <class T>
std::size_t ParamStore<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

template <class T>
void ParamStore<T>::zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <class T>
void ParamStore<T>::scale_grad(T factor) {
    for (auto& p : params_)
        for (T& g : p.grad) g *= factor;
}

template <class T>
bool ParamStore<T>::grads_all_zero() const {
    for (const auto& p : params_)
        for (T g : p.grad)
            if (g != T(0)) return false;
    return true;
}

template <class T>
void ParamStore<T>::kaiming_init(std::mt19937_64& rng) {
    for (auto& p : params_) {
        if (p.shape.size() == 4) {
            const double fan_in = static_cast<double>(p.shape[1]) * p.shape[2] * p.shape[3];
            std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
            for (T& v : p.value) v = static_cast<T>(normal(rng));
        } else {
            std::fill(p.value.begin(), p.value.end(), T(0));
        }
    }
}

template <class T>
std::uint64_t ParamStore<T>::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params_) {
        h = fnv1a(std::as_bytes(std::span<const char>(p.name.data(), p.name.size())), h);
        h = fnv1a(std::as_bytes(std::span<const T>(p.value)), h);
    }
    return h;
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace oct

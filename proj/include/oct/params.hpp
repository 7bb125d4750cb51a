#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oct/tensor.hpp"

namespace oct {

template <class T>
struct Param {
    std::string name;
    std::vector<int> shape;
    AlignedVector<T> value;
    AlignedVector<T> grad;  // same length as value; zero until a backward pass touches it
};

// Flat, ordered parameter list of one network. Ordering is the
// serialization order.
template <class T>
class ParamStore {
public:
    int add(std::string name, std::vector<int> shape);

    Param<T>& operator[](int id) { return params_[id]; }
    const Param<T>& operator[](int id) const { return params_[id]; }
    std::size_t size() const { return params_.size(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::size_t parameter_count() const;
    void zero_grad();
    void scale_grad(T factor);
    bool grads_all_zero() const;

    // He/Kaiming fan-in init for conv weights (name ends in ".weight"),
    // zeros for biases.
    void kaiming_init(std::mt19937_64& rng);

    // FNV-1a over every parameter value (bit pattern).
    std::uint64_t hash() const;

    template <class U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& p : params_) {
            int id = out.add(p.name, p.shape);
            for (std::size_t i = 0; i < p.value.size(); ++i) out[id].value[i] = static_cast<U>(p.value[i]);
        }
        return out;
    }

private:
    std::vector<Param<T>> params_;
};

}  // namespace oct

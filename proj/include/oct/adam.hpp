#pragma once

#include <cstdint>
#include <vector>

#include "oct/params.hpp"

namespace oct {

struct AdamState {
    std::vector<std::vector<float>> first_moment;
    std::vector<std::vector<float>> second_moment;
    std::int64_t step = 0;

    std::uint64_t hash() const;
    bool operator==(const AdamState&) const = default;
};

class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

    // One bias-corrected update from params[i].grad; grads are left intact.
    void step(ParamStore<float>& params);

    double learning_rate() const { return learning_rate_; }
    void set_learning_rate(double lr) { learning_rate_ = lr; }

    const AdamState& state() const { return state_; }
    void set_state(AdamState state) { state_ = std::move(state); }

private:
    double learning_rate_;
    double beta1_;
    double beta2_;
    double epsilon_;
    AdamState state_;
};

}  // namespace oct

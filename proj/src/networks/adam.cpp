#include "oct/adam.hpp"

#include <cmath>

#include "oct/error.hpp"
#include "oct/seed.hpp"

namespace oct {

std::uint64_t AdamState::hash() const {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(step));
    for (const auto& m : first_moment) h = fnv1a(std::as_bytes(std::span<const float>(m)), h);
    for (const auto& v : second_moment) h = fnv1a(std::as_bytes(std::span<const float>(v)), h);
    return h;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

void Adam::step(ParamStore<float>& params) {
    if (state_.first_moment.empty()) {
        for (const auto& p : params) {
            state_.first_moment.emplace_back(p.value.size(), 0.0f);
            state_.second_moment.emplace_back(p.value.size(), 0.0f);
        }
    }
    if (state_.first_moment.size() != params.size()) throw ArgumentError("optimizer state does not match parameters");
    ++state_.step;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(state_.step));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(state_.step));
    const float step_size = static_cast<float>(learning_rate_ / c1);
    const float b1 = static_cast<float>(beta1_);
    const float b2 = static_cast<float>(beta2_);
    const float inv_c2 = static_cast<float>(1.0 / c2);
    const float eps = static_cast<float>(epsilon_);
    std::size_t i = 0;
    for (auto& p : params) {
        auto& m = state_.first_moment[i];
        auto& v = state_.second_moment[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const float g = p.grad[j];
            m[j] = b1 * m[j] + (1.0f - b1) * g;
            v[j] = b2 * v[j] + (1.0f - b2) * g * g;
            p.value[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
        }
        ++i;
    }
}

}  // namespace oct

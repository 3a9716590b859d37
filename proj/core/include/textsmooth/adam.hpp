#pragma once

#include <cstdint>
#include <vector>

#include "textsmooth/tensor.hpp"

namespace textsmooth {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moment buffers for a fixed, ordered parameter list. Shapes are locked on
// first use; the step counter increases by exactly one per update.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return step_; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

private:
    friend void adam_step(std::vector<Tensor*>& params,
                          const std::vector<const Tensor*>& grads,
                          AdamState& state);
    AdamConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

// Standard Adam with bias correction; params are updated in place.
void adam_step(std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state);

} // namespace textsmooth

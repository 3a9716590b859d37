#include "textsmooth/adam.hpp"

#include <cmath>
#include <string>

#include "textsmooth/errors.hpp"

namespace textsmooth {

void adam_step(std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) +
                         " params vs " + std::to_string(grads.size()) + " grads");
    }
    if (state.m_.empty()) {
        state.m_.reserve(params.size());
        state.v_.reserve(params.size());
        for (const Tensor* p : params) {
            state.m_.push_back(Tensor::zeros(p->shape()));
            state.v_.push_back(Tensor::zeros(p->shape()));
        }
    }
    if (state.m_.size() != params.size()) {
        throw ShapeError("adam_step: state tracks " + std::to_string(state.m_.size()) +
                         " params, got " + std::to_string(params.size()));
    }
    state.step_ += 1;
    const AdamConfig& cfg = state.cfg_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = *grads[k];
        Tensor& m = state.m_[k];
        Tensor& v = state.v_[k];
        if (!p.same_shape(g) || !p.same_shape(m)) {
            throw ShapeError("adam_step: shape mismatch at param " + std::to_string(k) +
                             ": param " + p.shape_str() + ", grad " + g.shape_str());
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

} // namespace textsmooth

#pragma once

// Adam with bias correction. State tensors are shape-matched to the
// parameter list at first use; t counts completed steps.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "amc/nn/network.hpp"

namespace amc::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
struct AdamState {
    std::vector<Tensor<T>> m, v;
    int64_t t = 0;
};

template <class T>
void adam_step(std::vector<Param<T>*>& params, AdamState<T>& state, const AdamConfig& cfg) {
    if (state.t == 0 && state.m.empty()) {
        for (Param<T>* p : params) {
            state.m.emplace_back(p->value.shape);
            state.v.emplace_back(p->value.shape);
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state/parameter mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& w = params[i]->value;
        const Tensor<T>& g = params[i]->grad;
        Tensor<T>& m = state.m[i];
        Tensor<T>& v = state.v[i];
        if (!w.same_shape(m)) throw std::invalid_argument("adam_step: shape drift in state");
        for (size_t j = 0; j < w.size(); ++j) {
            const double gj = static_cast<double>(g.v[j]);
            const double mj = cfg.beta1 * static_cast<double>(m.v[j]) + (1.0 - cfg.beta1) * gj;
            const double vj = cfg.beta2 * static_cast<double>(v.v[j]) + (1.0 - cfg.beta2) * gj * gj;
            m.v[j] = static_cast<T>(mj);
            v.v[j] = static_cast<T>(vj);
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            w.v[j] = static_cast<T>(static_cast<double>(w.v[j]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace amc::nn

#pragma once

// Losses for training and for gradient verification. Cross-entropy pairs
// with a final softmax layer through the fused closed-form gradient
// (probs - onehot)/N with respect to the logits.

#include <cmath>
#include <span>
#include <stdexcept>

#include "amc/nn/tensor.hpp"

namespace amc::nn {

template <class T>
double cross_entropy(const Tensor<T>& probs, std::span<const int> labels) {
    const int n = probs.dim(0), d = probs.dim(1);
    if (static_cast<int>(labels.size()) != n) throw std::invalid_argument("cross_entropy: label count mismatch");
    double loss = 0.0;
    for (int r = 0; r < n; ++r) {
        const int y = labels[static_cast<size_t>(r)];
        if (y < 0 || y >= d) throw std::invalid_argument("cross_entropy: label out of range");
        const double p = std::max(static_cast<double>(probs.v[static_cast<size_t>(r) * d + y]), 1e-30);
        loss -= std::log(p);
    }
    return loss / n;
}

// Gradient of mean cross-entropy with respect to the softmax logits.
template <class T>
Tensor<T> cross_entropy_softmax_grad(const Tensor<T>& probs, std::span<const int> labels) {
    const int n = probs.dim(0), d = probs.dim(1);
    Tensor<T> g(probs.shape);
    const T inv_n = T(1) / static_cast<T>(n);
    for (int r = 0; r < n; ++r) {
        const size_t base = static_cast<size_t>(r) * d;
        for (int j = 0; j < d; ++j) g.v[base + j] = probs.v[base + j] * inv_n;
        g.v[base + labels[static_cast<size_t>(r)]] -= inv_n;
    }
    return g;
}

// Quadratic loss 0.5*sum(out^2); gradient equals the output. Used to
// verify layers in isolation without a classification head.
template <class T>
double sse_loss(const Tensor<T>& out) {
    double s = 0.0;
    for (T v : out.v) s += 0.5 * static_cast<double>(v) * static_cast<double>(v);
    return s;
}

template <class T>
Tensor<T> sse_grad(const Tensor<T>& out) {
    return out;
}

}  // namespace amc::nn

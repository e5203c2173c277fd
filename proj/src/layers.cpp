#include "amc/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "amc/nn/gemm.hpp"

namespace amc::nn {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Lstm: return "lstm";
        case LayerKind::Relu: return "relu";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Add: return "add";
        case LayerKind::Concat: return "concat";
        case LayerKind::Dropout: return "dropout";
    }
    return "?";
}

namespace {
[[noreturn]] void shape_error(const LayerSpec& spec, int idx, const std::string& what) {
    throw std::invalid_argument("layer " + std::to_string(idx) + " (" + layer_kind_name(spec.kind) +
                                "): " + what);
}

size_t flat(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return n;
}
}  // namespace

std::vector<int> infer_output_shape(const LayerSpec& spec, int idx,
                                    const std::vector<std::vector<int>>& in) {
    const auto arity = [&](size_t n) {
        if (in.size() != n) shape_error(spec, idx, "expects " + std::to_string(n) + " input(s)");
    };
    switch (spec.kind) {
        case LayerKind::Dense: {
            arity(1);
            if (spec.units < 1) shape_error(spec, idx, "units must be >= 1");
            if (in[0].size() != 1) shape_error(spec, idx, "expects flattened input, got " + shape_str(in[0]));
            return {spec.units};
        }
        case LayerKind::Conv2d: {
            arity(1);
            if (in[0].size() != 3) shape_error(spec, idx, "expects CxHxW input, got " + shape_str(in[0]));
            const int c = in[0][0], h = in[0][1], w = in[0][2];
            if (spec.filters < 1) shape_error(spec, idx, "filters must be >= 1");
            if (spec.kh < 1 || spec.kh > h)
                shape_error(spec, idx, "filter height " + std::to_string(spec.kh) + " does not fit height " +
                                           std::to_string(h));
            if (spec.kw < 1 || spec.kw > w)
                shape_error(spec, idx, "filter width " + std::to_string(spec.kw) + " exceeds length " +
                                           std::to_string(w));
            if (spec.kw % 2 == 0) shape_error(spec, idx, "filter width must be odd for same padding");
            (void)c;
            return {spec.filters, h - spec.kh + 1, w};
        }
        case LayerKind::MaxPool: {
            arity(1);
            if (in[0].size() != 3) shape_error(spec, idx, "expects CxHxW input, got " + shape_str(in[0]));
            if (spec.pool < 1) shape_error(spec, idx, "pool width must be >= 1");
            const int w = in[0][2] / spec.pool;
            if (w < 1) shape_error(spec, idx, "pooling would produce empty output");
            return {in[0][0], in[0][1], w};
        }
        case LayerKind::BatchNorm: {
            arity(1);
            if (in[0].empty()) shape_error(spec, idx, "empty input shape");
            return in[0];
        }
        case LayerKind::Lstm: {
            arity(1);
            if (spec.cells < 1) shape_error(spec, idx, "cells must be >= 1");
            int t = 0, f = 0;
            if (in[0].size() == 3) {  // C,H,W frame: time = W, features = C*H
                t = in[0][2];
                f = in[0][0] * in[0][1];
            } else if (in[0].size() == 2) {  // T,F sequence
                t = in[0][0];
                f = in[0][1];
            } else {
                shape_error(spec, idx, "expects CxHxW or TxF input, got " + shape_str(in[0]));
            }
            if (t < 1 || f < 1) shape_error(spec, idx, "degenerate sequence " + shape_str(in[0]));
            if (spec.return_sequences) return {t, spec.cells};
            return {spec.cells};
        }
        case LayerKind::Relu:
        case LayerKind::Dropout: {
            arity(1);
            return in[0];
        }
        case LayerKind::Softmax: {
            arity(1);
            if (in[0].size() != 1) shape_error(spec, idx, "expects flattened input, got " + shape_str(in[0]));
            return in[0];
        }
        case LayerKind::Flatten: {
            arity(1);
            return {static_cast<int>(flat(in[0]))};
        }
        case LayerKind::Add: {
            arity(2);
            if (in[0] != in[1])
                shape_error(spec, idx, "shape mismatch " + shape_str(in[0]) + " vs " + shape_str(in[1]));
            return in[0];
        }
        case LayerKind::Concat: {
            arity(2);
            if (in[0].size() != 3 || in[1].size() != 3)
                shape_error(spec, idx, "expects two CxHxW inputs");
            if (in[0][1] != in[1][1] || in[0][2] != in[1][2])
                shape_error(spec, idx, "spatial mismatch " + shape_str(in[0]) + " vs " + shape_str(in[1]));
            return {in[0][0] + in[1][0], in[0][1], in[0][2]};
        }
    }
    shape_error(spec, idx, "unknown layer kind");
}

std::vector<std::vector<int>> infer_all_shapes(const NetworkSpec& spec) {
    if (spec.input_shape.empty()) throw std::invalid_argument("network: empty input shape");
    std::vector<std::vector<int>> shapes(spec.layers.size());
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& ls = spec.layers[i];
        std::vector<int> inputs = ls.inputs;
        if (inputs.empty()) inputs = {static_cast<int>(i) - 1};
        std::vector<std::vector<int>> in_shapes;
        for (int j : inputs) {
            if (j >= static_cast<int>(i))
                throw std::invalid_argument("layer " + std::to_string(i) + ": input " + std::to_string(j) +
                                            " is not an earlier layer");
            if (j < -1) throw std::invalid_argument("layer " + std::to_string(i) + ": bad input index");
            in_shapes.push_back(j == -1 ? spec.input_shape : shapes[static_cast<size_t>(j)]);
        }
        shapes[i] = infer_output_shape(ls, static_cast<int>(i), in_shapes);
    }
    return shapes;
}

template <class T>
void lstm_cell_step(const Tensor<T>& x_t, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                    const Tensor<T>& wx, const Tensor<T>& wh, const Tensor<T>& b, Tensor<T>& h_t,
                    Tensor<T>& c_t, Tensor<T>* gates_out) {
    const int n = x_t.dim(0);
    const int f = x_t.dim(1);
    const int hh = h_prev.dim(1);
    if (wx.dim(0) != 4 * hh || wx.dim(1) != f || wh.dim(0) != 4 * hh || wh.dim(1) != hh ||
        static_cast<int>(b.size()) != 4 * hh || c_prev.dim(0) != n || h_prev.dim(0) != n)
        throw std::invalid_argument("lstm_cell_step: inconsistent shapes");

    Tensor<T> z({n, 4 * hh});
    gemm_nt(x_t.data(), wx.data(), z.data(), n, f, 4 * hh, false);
    gemm_nt(h_prev.data(), wh.data(), z.data(), n, hh, 4 * hh, true);
    for (int r = 0; r < n; ++r) {
        T* zr = z.data() + static_cast<size_t>(r) * 4 * hh;
        for (int j = 0; j < 4 * hh; ++j) zr[j] += b.v[static_cast<size_t>(j)];
    }
    if (gates_out) *gates_out = z;

    if (h_t.shape != std::vector<int>{n, hh}) h_t = Tensor<T>({n, hh});
    if (c_t.shape != std::vector<int>{n, hh}) c_t = Tensor<T>({n, hh});
    for (int r = 0; r < n; ++r) {
        const T* zr = z.data() + static_cast<size_t>(r) * 4 * hh;
        const T* cp = c_prev.data() + static_cast<size_t>(r) * hh;
        T* ct = c_t.data() + static_cast<size_t>(r) * hh;
        T* ht = h_t.data() + static_cast<size_t>(r) * hh;
        for (int j = 0; j < hh; ++j) {
            const T ig = T(1) / (T(1) + std::exp(-zr[j]));
            const T fg = T(1) / (T(1) + std::exp(-zr[hh + j]));
            const T gg = std::tanh(zr[2 * hh + j]);
            const T og = T(1) / (T(1) + std::exp(-zr[3 * hh + j]));
            ct[j] = fg * cp[j] + ig * gg;
            ht[j] = og * std::tanh(ct[j]);
        }
    }
}

template void lstm_cell_step<float>(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                    const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                    Tensor<float>&, Tensor<float>&, Tensor<float>*);
template void lstm_cell_step<double>(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                     const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                     Tensor<double>&, Tensor<double>&, Tensor<double>*);

}  // namespace amc::nn

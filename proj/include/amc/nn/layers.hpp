#pragma once

// Layer graph description. A NetworkSpec is an ordered list of LayerSpec
// nodes; each node names its inputs by layer index (empty = previous
// layer, -1 = network input). Skip references may only point backwards.

#include <cstdint>
#include <string>
#include <vector>

#include "amc/nn/tensor.hpp"

namespace amc::nn {

enum class LayerKind : uint8_t {
    Dense = 0,
    Conv2d = 1,
    MaxPool = 2,
    BatchNorm = 3,
    Lstm = 4,
    Relu = 5,
    Softmax = 6,
    Flatten = 7,
    Add = 8,
    Concat = 9,
    Dropout = 10,
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int units = 0;        // dense
    int filters = 0;      // conv2d
    int kh = 1, kw = 1;   // conv2d filter shape
    int pool = 2;         // maxpool width (1 x pool along W)
    int cells = 0;        // lstm
    bool return_sequences = false;
    double rate = 0.5;    // dropout
    std::vector<int> inputs;  // empty = {previous layer}

    static LayerSpec dense(int units) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.units = units;
        return s;
    }
    static LayerSpec conv2d(int filters, int kh, int kw) {
        LayerSpec s;
        s.kind = LayerKind::Conv2d;
        s.filters = filters;
        s.kh = kh;
        s.kw = kw;
        return s;
    }
    static LayerSpec maxpool(int pool = 2) {
        LayerSpec s;
        s.kind = LayerKind::MaxPool;
        s.pool = pool;
        return s;
    }
    static LayerSpec batchnorm() {
        LayerSpec s;
        s.kind = LayerKind::BatchNorm;
        return s;
    }
    static LayerSpec lstm(int cells, bool return_sequences) {
        LayerSpec s;
        s.kind = LayerKind::Lstm;
        s.cells = cells;
        s.return_sequences = return_sequences;
        return s;
    }
    static LayerSpec relu() { return LayerSpec{}; }
    static LayerSpec softmax() {
        LayerSpec s;
        s.kind = LayerKind::Softmax;
        return s;
    }
    static LayerSpec flatten() {
        LayerSpec s;
        s.kind = LayerKind::Flatten;
        return s;
    }
    static LayerSpec add(int a, int b) {
        LayerSpec s;
        s.kind = LayerKind::Add;
        s.inputs = {a, b};
        return s;
    }
    static LayerSpec concat(int a, int b) {
        LayerSpec s;
        s.kind = LayerKind::Concat;
        s.inputs = {a, b};
        return s;
    }
    static LayerSpec dropout(double rate) {
        LayerSpec s;
        s.kind = LayerKind::Dropout;
        s.rate = rate;
        return s;
    }
};

struct NetworkSpec {
    std::string name;
    std::vector<int> input_shape;  // without batch: {C,H,W} frames, {T,F} sequences
    std::vector<LayerSpec> layers;
};

// Output shape (without batch) of one layer given its input shapes.
// Throws std::invalid_argument with the layer's index and kind on any
// inconsistency; this is the network shape validation used by builders.
std::vector<int> infer_output_shape(const LayerSpec& spec, int layer_index,
                                    const std::vector<std::vector<int>>& input_shapes);

// Shapes of every layer's output for the given spec; validates the graph.
std::vector<std::vector<int>> infer_all_shapes(const NetworkSpec& spec);

// One LSTM recurrence step over a batch: gates [i f g o],
//   c_t = sig(f) .* c_prev + sig(i) .* tanh(g)
//   h_t = sig(o) .* tanh(c_t)
// x_t: [N,F], h_prev/c_prev/h_t/c_t: [N,H], wx: [4H,F], wh: [4H,H], b: [4H].
// When gates_out is non-null it receives the pre-activation gate block
// [N,4H] (needed for backprop through time).
template <class T>
void lstm_cell_step(const Tensor<T>& x_t, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                    const Tensor<T>& wx, const Tensor<T>& wh, const Tensor<T>& b, Tensor<T>& h_t,
                    Tensor<T>& c_t, Tensor<T>* gates_out = nullptr);

}  // namespace amc::nn

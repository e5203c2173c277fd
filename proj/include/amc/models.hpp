#pragma once

// The five classifier architectures as layer graphs over a 2xL input
// frame (1 channel, 2 rows, L time samples). All heads are 10-way softmax.

#include <optional>
#include <string>

#include "amc/nn/layers.hpp"

namespace amc {

enum class ArchKind : uint8_t {
    CNN4 = 0,
    DENSENET = 1,
    CLDNN = 2,
    LSTM2 = 3,
    RESNET3 = 4,
};

const char* arch_name(ArchKind a);
std::optional<ArchKind> arch_from_name(const std::string& name);

inline constexpr int kNumClasses = 10;

struct Cnn4Options {
    int f1 = 256, f2 = 256, f3 = 80, f4 = 80;
    int filter_w = 3;
    int dense_units = 128;
    double dropout = 0.5;
};

// Four same-padded conv layers, flatten, dense 128, dense 10 softmax;
// dropout after each conv and the first dense layer.
nn::NetworkSpec build_cnn4(int input_len, const Cnn4Options& opt = {});

// CNN4 with concatenation skips around each two-conv group.
nn::NetworkSpec build_densenet(int input_len, const Cnn4Options& opt = {});

// CNN4's first three conv layers, an LSTM over the time axis, then the
// dense head.
nn::NetworkSpec build_cldnn(int input_len, int lstm_cells = 50, const Cnn4Options& opt = {});

// Two stacked 128-cell LSTMs over polar-form input, dense 10 softmax.
nn::NetworkSpec build_lstm2(int input_len, int cells = 128);

struct Resnet3Options {
    int channels = 32;
    int filter_w = 5;
    int dense_units = 128;
};

// Three residual stacks (lead conv, two residual units, 1x2 max-pool)
// followed by dense 128, dense 128, dense 10 softmax. Filter widths clamp
// to short inputs and pooling is skipped when the length would reach 0.
nn::NetworkSpec build_resnet3(int input_len, const Resnet3Options& opt = {});

nn::NetworkSpec build_arch(ArchKind arch, int input_len);

}  // namespace amc

#include "amc/models.hpp"

#include <algorithm>
#include <stdexcept>

namespace amc {

using nn::LayerSpec;
using nn::NetworkSpec;

const char* arch_name(ArchKind a) {
    switch (a) {
        case ArchKind::CNN4: return "cnn4";
        case ArchKind::DENSENET: return "densenet";
        case ArchKind::CLDNN: return "cldnn";
        case ArchKind::LSTM2: return "lstm2";
        case ArchKind::RESNET3: return "resnet3";
    }
    return "?";
}

std::optional<ArchKind> arch_from_name(const std::string& name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), ::tolower);
    for (int i = 0; i < 5; ++i) {
        const ArchKind a = static_cast<ArchKind>(i);
        if (n == arch_name(a)) return a;
    }
    return std::nullopt;
}

namespace {

int clamp_odd_width(int want, int len) {
    int w = std::min(want, len);
    if (w % 2 == 0) --w;
    return std::max(w, 1);
}

void check_len(int input_len, int minimum, const char* arch) {
    if (input_len < minimum)
        throw std::invalid_argument(std::string(arch) + ": input length must be >= " + std::to_string(minimum));
}

}  // namespace

NetworkSpec build_cnn4(int input_len, const Cnn4Options& opt) {
    check_len(input_len, 1, "cnn4");
    NetworkSpec s;
    s.name = "cnn4";
    s.input_shape = {1, 2, input_len};
    const int kw = clamp_odd_width(opt.filter_w, input_len);
    for (int f : {opt.f1, opt.f2, opt.f3, opt.f4}) {
        s.layers.push_back(LayerSpec::conv2d(f, 1, kw));
        s.layers.push_back(LayerSpec::relu());
        s.layers.push_back(LayerSpec::dropout(opt.dropout));
    }
    s.layers.push_back(LayerSpec::flatten());
    s.layers.push_back(LayerSpec::dense(opt.dense_units));
    s.layers.push_back(LayerSpec::relu());
    s.layers.push_back(LayerSpec::dropout(opt.dropout));
    s.layers.push_back(LayerSpec::dense(kNumClasses));
    s.layers.push_back(LayerSpec::softmax());
    return s;
}

NetworkSpec build_densenet(int input_len, const Cnn4Options& opt) {
    check_len(input_len, 1, "densenet");
    NetworkSpec s;
    s.name = "densenet";
    s.input_shape = {1, 2, input_len};
    const int kw = clamp_odd_width(opt.filter_w, input_len);
    // Group 1: two convs, then concat the group input back in.
    int group_in = -1;
    for (int f : {opt.f1, opt.f2}) {
        s.layers.push_back(LayerSpec::conv2d(f, 1, kw));
        s.layers.push_back(LayerSpec::relu());
        s.layers.push_back(LayerSpec::dropout(opt.dropout));
    }
    s.layers.push_back(LayerSpec::concat(group_in, static_cast<int>(s.layers.size()) - 1));
    group_in = static_cast<int>(s.layers.size()) - 1;
    // Group 2.
    for (int f : {opt.f3, opt.f4}) {
        s.layers.push_back(LayerSpec::conv2d(f, 1, kw));
        s.layers.push_back(LayerSpec::relu());
        s.layers.push_back(LayerSpec::dropout(opt.dropout));
    }
    s.layers.push_back(LayerSpec::concat(group_in, static_cast<int>(s.layers.size()) - 1));
    s.layers.push_back(LayerSpec::flatten());
    s.layers.push_back(LayerSpec::dense(opt.dense_units));
    s.layers.push_back(LayerSpec::relu());
    s.layers.push_back(LayerSpec::dropout(opt.dropout));
    s.layers.push_back(LayerSpec::dense(kNumClasses));
    s.layers.push_back(LayerSpec::softmax());
    return s;
}

NetworkSpec build_cldnn(int input_len, int lstm_cells, const Cnn4Options& opt) {
    check_len(input_len, 1, "cldnn");
    NetworkSpec s;
    s.name = "cldnn";
    s.input_shape = {1, 2, input_len};
    const int kw = clamp_odd_width(opt.filter_w, input_len);
    for (int f : {opt.f1, opt.f2, opt.f3}) {
        s.layers.push_back(LayerSpec::conv2d(f, 1, kw));
        s.layers.push_back(LayerSpec::relu());
        s.layers.push_back(LayerSpec::dropout(opt.dropout));
    }
    // Conv feature maps feed the recurrence time-major (time = W axis).
    s.layers.push_back(LayerSpec::lstm(lstm_cells, /*return_sequences=*/false));
    s.layers.push_back(LayerSpec::dense(opt.dense_units));
    s.layers.push_back(LayerSpec::relu());
    s.layers.push_back(LayerSpec::dropout(opt.dropout));
    s.layers.push_back(LayerSpec::dense(kNumClasses));
    s.layers.push_back(LayerSpec::softmax());
    return s;
}

NetworkSpec build_lstm2(int input_len, int cells) {
    check_len(input_len, 1, "lstm2");
    NetworkSpec s;
    s.name = "lstm2";
    s.input_shape = {1, 2, input_len};  // polar amplitude/phase rows
    s.layers.push_back(LayerSpec::lstm(cells, /*return_sequences=*/true));
    s.layers.push_back(LayerSpec::lstm(cells, /*return_sequences=*/false));
    s.layers.push_back(LayerSpec::dense(kNumClasses));
    s.layers.push_back(LayerSpec::softmax());
    return s;
}

NetworkSpec build_resnet3(int input_len, const Resnet3Options& opt) {
    check_len(input_len, 2, "resnet3");
    NetworkSpec s;
    s.name = "resnet3";
    s.input_shape = {1, 2, input_len};
    int len = input_len;

    auto conv_bn_relu = [&](int kh, int kw) {
        s.layers.push_back(LayerSpec::conv2d(opt.channels, kh, kw));
        s.layers.push_back(LayerSpec::batchnorm());
        s.layers.push_back(LayerSpec::relu());
    };

    for (int stack = 0; stack < 3; ++stack) {
        const int kw = clamp_odd_width(opt.filter_w, len);
        // Lead conv; the first collapses the 2-row axis.
        conv_bn_relu(stack == 0 ? 2 : 1, kw);
        for (int unit = 0; unit < 2; ++unit) {
            const int unit_in = static_cast<int>(s.layers.size()) - 1;
            s.layers.push_back(LayerSpec::conv2d(opt.channels, 1, kw));
            s.layers.push_back(LayerSpec::batchnorm());
            s.layers.push_back(LayerSpec::relu());
            s.layers.push_back(LayerSpec::conv2d(opt.channels, 1, kw));
            s.layers.push_back(LayerSpec::batchnorm());
            s.layers.push_back(LayerSpec::add(unit_in, static_cast<int>(s.layers.size()) - 1));
            s.layers.push_back(LayerSpec::relu());
        }
        if (len / 2 >= 1) {
            s.layers.push_back(LayerSpec::maxpool(2));
            len /= 2;
        }
    }
    s.layers.push_back(LayerSpec::flatten());
    s.layers.push_back(LayerSpec::dense(opt.dense_units));
    s.layers.push_back(LayerSpec::relu());
    s.layers.push_back(LayerSpec::dense(opt.dense_units));
    s.layers.push_back(LayerSpec::relu());
    s.layers.push_back(LayerSpec::dense(kNumClasses));
    s.layers.push_back(LayerSpec::softmax());
    return s;
}

NetworkSpec build_arch(ArchKind arch, int input_len) {
    switch (arch) {
        case ArchKind::CNN4: return build_cnn4(input_len);
        case ArchKind::DENSENET: return build_densenet(input_len);
        case ArchKind::CLDNN: return build_cldnn(input_len);
        case ArchKind::LSTM2: return build_lstm2(input_len);
        case ArchKind::RESNET3: return build_resnet3(input_len);
    }
    throw std::invalid_argument("build_arch: unknown architecture");
}

}  // namespace amc

#include <cmath>

#include "amc/models.hpp"
#include "amc/nn/gradcheck.hpp"
#include "amc/nn/network.hpp"
#include "amc/rng.hpp"
#include "doctest.h"

using namespace amc;
using namespace amc::nn;

namespace {

Tensor<float> random_frames(int batch, int len, uint64_t seed) {
    Tensor<float> x({batch, 1, 2, len});
    Rng rng(seed);
    for (float& v : x.v) v = static_cast<float>(rng.normal());
    return x;
}

void check_probability_head(const Tensor<float>& out, int batch) {
    REQUIRE(out.shape == std::vector<int>{batch, 10});
    for (int r = 0; r < batch; ++r) {
        float sum = 0.f;
        for (int j = 0; j < 10; ++j) {
            const float p = out.v[static_cast<size_t>(r * 10 + j)];
            CHECK(p >= 0.f);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0f) < 1e-5f);
    }
}

size_t spec_param_count(const NetworkSpec& spec) {
    Network<float> net(spec, 1);
    return net.param_count();
}

}  // namespace

TEST_CASE("cnn4 forward shape and 10-class head") {
    const auto spec = build_cnn4(128);
    Network<float> net(spec, 3);
    const auto& out = net.forward(random_frames(32, 128, 5), false);
    check_probability_head(out, 32);
}

TEST_CASE("cnn4 has more parameters than its two-conv ancestor") {
    const auto four = build_cnn4(64);
    Cnn4Options opt;
    NetworkSpec two;
    two.name = "cnn2";
    two.input_shape = {1, 2, 64};
    for (int f : {opt.f1, opt.f3}) {
        two.layers.push_back(LayerSpec::conv2d(f, 1, opt.filter_w));
        two.layers.push_back(LayerSpec::relu());
        two.layers.push_back(LayerSpec::dropout(opt.dropout));
    }
    two.layers.push_back(LayerSpec::flatten());
    two.layers.push_back(LayerSpec::dense(opt.dense_units));
    two.layers.push_back(LayerSpec::relu());
    two.layers.push_back(LayerSpec::dropout(opt.dropout));
    two.layers.push_back(LayerSpec::dense(kNumClasses));
    two.layers.push_back(LayerSpec::softmax());
    CHECK(spec_param_count(four) > spec_param_count(two));
}

TEST_CASE("densenet minus skips is exactly the cnn4 layer sequence") {
    const auto dense = build_densenet(128);
    const auto cnn = build_cnn4(128);
    std::vector<LayerSpec> stripped;
    for (const auto& l : dense.layers)
        if (l.kind != LayerKind::Concat) stripped.push_back(l);
    REQUIRE(stripped.size() == cnn.layers.size());
    for (size_t i = 0; i < stripped.size(); ++i) {
        CHECK(stripped[i].kind == cnn.layers[i].kind);
        CHECK(stripped[i].filters == cnn.layers[i].filters);
        CHECK(stripped[i].units == cnn.layers[i].units);
    }
}

TEST_CASE("densenet concat widths add the skipped-in channels") {
    const auto spec = build_densenet(128);
    const auto shapes = infer_all_shapes(spec);
    std::vector<int> concat_channels;
    for (size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::Concat) concat_channels.push_back(shapes[i][0]);
    REQUIRE(concat_channels.size() == 2);
    CHECK(concat_channels[0] == 256 + 1);       // group output + network input
    CHECK(concat_channels[1] == 80 + 256 + 1);  // group output + group-1 concat

    Network<float> net(spec, 2);
    const auto& out = net.forward(random_frames(8, 128, 6), false);
    check_probability_head(out, 8);
}

TEST_CASE("cldnn places a 50-cell lstm between convs and dense layers") {
    const auto spec = build_cldnn(128);
    int lstm_index = -1;
    for (size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::Lstm) lstm_index = static_cast<int>(i);
    REQUIRE(lstm_index >= 0);
    CHECK(spec.layers[static_cast<size_t>(lstm_index)].cells == 50);
    // convs before, dense after
    bool conv_before = false, dense_after = false;
    for (int i = 0; i < lstm_index; ++i) conv_before |= spec.layers[static_cast<size_t>(i)].kind == LayerKind::Conv2d;
    for (size_t i = static_cast<size_t>(lstm_index) + 1; i < spec.layers.size(); ++i)
        dense_after |= spec.layers[i].kind == LayerKind::Dense;
    CHECK(conv_before);
    CHECK(dense_after);

    Network<float> net(spec, 4);
    const auto& out = net.forward(random_frames(8, 128, 7), false);
    check_probability_head(out, 8);
}

TEST_CASE("cldnn with the lstm swapped for flatten degrades to a cnn") {
    NetworkSpec spec = build_cldnn(64);
    for (auto& l : spec.layers)
        if (l.kind == LayerKind::Lstm) l = LayerSpec::flatten();
    Network<float> net(spec, 5);
    const auto& out = net.forward(random_frames(4, 64, 8), false);
    check_probability_head(out, 4);
}

TEST_CASE("lstm2 is two 128-cell recurrent layers into a softmax head") {
    const auto spec = build_lstm2(128);
    std::vector<int> cell_counts;
    for (const auto& l : spec.layers)
        if (l.kind == LayerKind::Lstm) cell_counts.push_back(l.cells);
    CHECK(cell_counts == std::vector<int>{128, 128});
    CHECK(spec.layers[spec.layers.size() - 2].kind == LayerKind::Dense);
    CHECK(spec.layers[spec.layers.size() - 2].units == 10);
    CHECK(spec.layers.back().kind == LayerKind::Softmax);

    Network<float> net(spec, 6);
    const auto& out = net.forward(random_frames(4, 128, 9), false);
    check_probability_head(out, 4);
}

TEST_CASE("resnet3 stack dimensions follow the 2x128 schedule") {
    const auto spec = build_resnet3(128);
    const auto shapes = infer_all_shapes(spec);
    std::vector<std::vector<int>> pooled;
    for (size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::MaxPool) pooled.push_back(shapes[i]);
    REQUIRE(pooled.size() == 3);
    CHECK(pooled[0] == std::vector<int>{32, 1, 64});
    CHECK(pooled[1] == std::vector<int>{32, 1, 32});
    CHECK(pooled[2] == std::vector<int>{32, 1, 16});

    // dense head 128, 128, 10
    std::vector<int> dense_units;
    for (const auto& l : spec.layers)
        if (l.kind == LayerKind::Dense) dense_units.push_back(l.units);
    CHECK(dense_units == std::vector<int>{128, 128, 10});
}

TEST_CASE("residual unit with zeroed convs is an identity plus relu") {
    const auto spec = build_resnet3(32);
    Network<float> net(spec, 7);

    // locate the first residual unit: add layer and its skip input
    int add_index = -1;
    for (size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::Add) {
            add_index = static_cast<int>(i);
            break;
        }
    REQUIRE(add_index >= 0);
    const int unit_input = spec.layers[static_cast<size_t>(add_index)].inputs[0];

    // zero the two convs inside that unit
    auto params = net.params();
    for (Param<float>* p : params) {
        for (int li = unit_input + 1; li < add_index; ++li) {
            const std::string prefix = "layer" + std::to_string(li) + ".conv";
            if (p->name.rfind(prefix, 0) == 0) p->value.zero();
        }
    }

    net.forward(random_frames(4, 32, 10), false);
    const auto& skip_in = net.activation(static_cast<size_t>(unit_input));
    const auto& add_out = net.activation(static_cast<size_t>(add_index));
    REQUIRE(skip_in.shape == add_out.shape);
    for (size_t i = 0; i < skip_in.size(); ++i)
        CHECK(add_out.v[i] == doctest::Approx(skip_in.v[i]).epsilon(1e-6));
}

TEST_CASE("every builder validates and runs at all reduced input lengths") {
    for (int len : {4, 8, 16, 32, 64, 128}) {
        for (int a = 0; a < 5; ++a) {
            const ArchKind arch = static_cast<ArchKind>(a);
            const auto spec = build_arch(arch, len);
            CHECK_NOTHROW(infer_all_shapes(spec));
            Network<float> net(spec, 11);
            const auto& out = net.forward(random_frames(2, len, 12), false);
            CHECK(out.shape == std::vector<int>{2, 10});
        }
    }
}

TEST_CASE("all five architectures pass a gradient check at 2x8") {
    for (int a = 0; a < 5; ++a) {
        const ArchKind arch = static_cast<ArchKind>(a);
        const auto spec = build_arch(arch, 8);
        Network<double> net(spec, 13);
        Tensor<double> x({3, 1, 2, 8});
        Rng rng(14);
        for (double& v : x.v) v = rng.normal();
        std::vector<int> labels{1, 7, 3};
        GradCheckOptions opt;
        opt.max_entries_per_tensor = 20;
        const auto report = grad_check(net, x, labels, opt);
        INFO(arch_name(arch), ": worst ", report.worst_param, " err ", report.max_rel_error);
        CHECK(report.max_rel_error < 1e-3);
    }
}

TEST_CASE("unknown or invalid inputs are rejected") {
    CHECK_THROWS(build_resnet3(1));
    CHECK(arch_from_name("resnet3").has_value());
    CHECK(arch_from_name("RESNET3").has_value());
    CHECK_FALSE(arch_from_name("vgg").has_value());
}

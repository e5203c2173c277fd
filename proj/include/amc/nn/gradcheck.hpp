#pragma once

// Central-finite-difference verification of the analytic gradients.
// Always runs in double. For large networks a deterministic, seeded
// subset of entries per parameter tensor is checked; every entry is
// checked when the tensor fits under the cap.

#include <algorithm>
#include <string>
#include <vector>

#include "amc/nn/loss.hpp"
#include "amc/nn/network.hpp"
#include "amc/rng.hpp"

namespace amc::nn {

enum class GradCheckLoss { CrossEntropy, Sse };

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    // 0 = check every entry; otherwise at most this many per tensor.
    size_t max_entries_per_tensor = 0;
    uint64_t sample_seed = 7;
    GradCheckLoss loss = GradCheckLoss::CrossEntropy;
    // Fault injection for self-testing: scale the named parameter's
    // analytic gradient before comparing.
    std::string corrupt_param;
    double corrupt_scale = 1.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    size_t worst_index = 0;
    size_t entries_checked = 0;
    double tolerance = 0.0;

    bool pass() const { return max_rel_error < tolerance; }
};

// Relative error with an absolute floor: gradients smaller than the floor
// are compared on the floor's absolute scale, since a central difference
// of a loss near 1.0 cannot resolve below ~1e-11 and a ratio of two
// noise-level numbers is meaningless.
inline double rel_error(double a, double b, double floor = 1e-3) {
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / denom;
}

inline uint64_t fnv_name(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline GradCheckReport grad_check(Network<double>& net, const Tensor<double>& input,
                                  std::span<const int> labels, const GradCheckOptions& opt = {}) {
    GradCheckReport report;
    report.tolerance = opt.tolerance;

    const auto loss_of = [&](const Tensor<double>& out) {
        return opt.loss == GradCheckLoss::CrossEntropy ? cross_entropy(out, labels) : sse_loss(out);
    };

    // Analytic pass.
    net.zero_grads();
    const Tensor<double>& out = net.forward(input, /*training=*/true);
    if (opt.loss == GradCheckLoss::CrossEntropy) {
        net.backward(cross_entropy_softmax_grad(out, labels), /*fused_softmax_ce=*/true);
    } else {
        net.backward(sse_grad(out), false);
    }

    auto params = net.params();
    for (Param<double>* p : params) {
        std::vector<size_t> entries;
        const size_t n = p->value.size();
        if (opt.max_entries_per_tensor == 0 || n <= opt.max_entries_per_tensor) {
            entries.resize(n);
            for (size_t i = 0; i < n; ++i) entries[i] = i;
        } else {
            Rng rng(mix_seed(opt.sample_seed, fnv_name(p->name)));
            for (size_t i = 0; i < opt.max_entries_per_tensor; ++i)
                entries.push_back(static_cast<size_t>(rng.below(n)));
            std::sort(entries.begin(), entries.end());
            entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
        }
        for (size_t idx : entries) {
            double analytic = p->grad.v[idx];
            if (p->name == opt.corrupt_param) analytic *= opt.corrupt_scale;
            // A secant that straddles a relu/maxpool kink is contaminated
            // by O(step); shrinking the step isolates the smooth regime
            // while a genuinely wrong gradient keeps failing.
            double err = 1e300;
            for (const double h : {opt.step, opt.step / 10.0, opt.step / 100.0, opt.step / 1000.0}) {
                const double orig = p->value.v[idx];
                p->value.v[idx] = orig + h;
                const double lp = loss_of(net.forward(input, true));
                p->value.v[idx] = orig - h;
                const double lm = loss_of(net.forward(input, true));
                p->value.v[idx] = orig;
                const double numeric = (lp - lm) / (2.0 * h);
                err = std::min(err, rel_error(analytic, numeric));
                if (err < opt.tolerance) break;
            }
            ++report.entries_checked;
            if (err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_param = p->name;
                report.worst_index = idx;
            }
        }
    }
    // Leave activations consistent with the unperturbed parameters.
    net.forward(input, true);
    return report;
}

}  // namespace amc::nn

#include <cmath>

#include "amc/channel.hpp"
#include "doctest.h"
#include "testing_util.hpp"

using namespace amc;
using amctest::estimate_frequency;

namespace {
cvec unit_tone(size_t n, double freq) {
    cvec x(n);
    for (size_t i = 0; i < n; ++i) {
        const double a = 2.0 * M_PI * freq * static_cast<double>(i);
        x[i] = {std::cos(a), std::sin(a)};
    }
    return x;
}

double empirical_snr_db(const cvec& clean, const cvec& noisy) {
    double ps = 0.0, pn = 0.0;
    for (size_t i = 0; i < clean.size(); ++i) {
        ps += std::norm(clean[i]);
        pn += std::norm(noisy[i] - clean[i]);
    }
    return 10.0 * std::log10(ps / pn);
}
}  // namespace

TEST_CASE("awgn at infinite snr is the identity") {
    Rng rng(1);
    const auto x = unit_tone(256, 0.03);
    const auto y = add_awgn(x, std::numeric_limits<double>::infinity(), rng);
    for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("awgn hits the target snr empirically") {
    const auto x = unit_tone(100000, 0.01);
    for (double snr : {-20.0, 0.0, 10.0, 18.0}) {
        Rng rng(static_cast<uint64_t>(snr + 100));
        const auto y = add_awgn(x, snr, rng);
        CHECK(std::abs(empirical_snr_db(x, y) - snr) < 0.1);
    }
}

TEST_CASE("awgn at 0 dB on unit power has unit noise variance") {
    const auto x = unit_tone(100000, 0.05);
    Rng rng(7);
    const auto y = add_awgn(x, 0.0, rng);
    double pn = 0.0;
    for (size_t i = 0; i < x.size(); ++i) pn += std::norm(y[i] - x[i]);
    CHECK(pn / static_cast<double>(x.size()) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("awgn noise power is monotone in snr") {
    const auto x = unit_tone(20000, 0.05);
    Rng r1(3), r2(3);
    const auto hi = add_awgn(x, 10.0, r1);
    const auto lo = add_awgn(x, 0.0, r2);
    double pn_hi = 0.0, pn_lo = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        pn_hi += std::norm(hi[i] - x[i]);
        pn_lo += std::norm(lo[i] - x[i]);
    }
    CHECK(pn_hi < pn_lo);
}

TEST_CASE("awgn rejects zero-power input at finite snr") {
    cvec zeros(16, cdouble{0.0, 0.0});
    Rng rng(1);
    CHECK_THROWS(add_awgn(zeros, 10.0, rng));
}

TEST_CASE("cfo/phase rotation basics") {
    Rng rng(1);
    cvec ones(16, cdouble{1.0, 0.0});
    const auto ident = apply_cfo_phase(ones, 0.0, 0.0, 0.0, rng);
    for (const auto& v : ident) CHECK(std::abs(v - cdouble{1.0, 0.0}) < 1e-15);

    const auto rot = apply_cfo_phase(ones, 0.25, 0.0, 0.0, rng);
    // y[n] = j^n
    cdouble expect{1.0, 0.0};
    for (size_t i = 0; i < rot.size(); ++i) {
        CHECK(std::abs(rot[i] - expect) < 1e-9);
        expect *= cdouble{0.0, 1.0};
    }
}

TEST_CASE("rotation preserves magnitude and energy") {
    Rng rng(5), noise(6);
    cvec x(4096);
    for (auto& v : x) v = noise.cnormal();
    const auto y = apply_cfo_phase(x, 1e-3, 0.7, 0.05, rng);
    double ex = 0.0, ey = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        CHECK(std::abs(std::abs(y[i]) - std::abs(x[i])) < 1e-12);
        ex += std::norm(x[i]);
        ey += std::norm(y[i]);
    }
    CHECK(std::abs(ey - ex) / ex < 1e-9);
}

TEST_CASE("fading with trivial taps") {
    cvec x{{1, 0}, {2, 0}, {3, 0}, {4, 0}};
    const cvec ident{cdouble{1.0, 0.0}};
    const auto y = apply_fading(x, ident);
    for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);

    const cvec delay{cdouble{0.0, 0.0}, cdouble{1.0, 0.0}};
    const auto z = apply_fading(x, delay);
    CHECK(std::abs(z[0]) == 0.0);
    for (size_t i = 1; i < x.size(); ++i) CHECK(z[i] == x[i - 1]);
}

TEST_CASE("normalized random fading approximately preserves power") {
    Rng rng(11);
    cvec x(100000);
    for (auto& v : x) v = rng.cnormal();
    const auto params = draw_channel_params({}, 0.0, 99);
    double tap_power = 0.0;
    for (const auto& t : params.fading_taps) tap_power += std::norm(t);
    CHECK(std::abs(tap_power - 1.0) < 1e-6);
    const auto y = apply_fading(x, params.fading_taps);
    CHECK(std::abs(mean_power(y) / mean_power(x) - 1.0) < 0.05);
}

TEST_CASE("timing and sample-rate offset") {
    // identity
    cvec ramp(64);
    for (size_t i = 0; i < ramp.size(); ++i) ramp[i] = {static_cast<double>(i), 0.0};
    const auto ident = apply_timing_sro(ramp, 0.0, 8, 0.0);
    for (size_t i = 0; i < ramp.size(); ++i) CHECK(std::abs(ident[i] - ramp[i]) < 1e-12);

    // half-symbol delay on a ramp: y[n] = n - 4 in the interior
    const auto shifted = apply_timing_sro(ramp, 0.5, 8, 0.0);
    for (size_t i = 8; i + 8 < ramp.size(); ++i)
        CHECK(shifted[i].real() == doctest::Approx(static_cast<double>(i) - 4.0).epsilon(1e-12));

    // 50 ppm clock offset scales an observed tone by 1/(1+5e-5)
    cvec tone(100000);
    const double f = 0.02;
    for (size_t i = 0; i < tone.size(); ++i) {
        const double a = 2.0 * M_PI * f * static_cast<double>(i);
        tone[i] = {std::cos(a), std::sin(a)};
    }
    const auto out = apply_timing_sro(tone, 0.0, 8, 50.0);
    const cvec trimmed(out.begin() + 16, out.end() - 16);
    const double measured = estimate_frequency(trimmed);
    const double expected = f / (1.0 + 50e-6);
    CHECK(std::abs(measured - expected) / expected < 1e-6);
}

TEST_CASE("apply_channel neutral parameters at infinite snr is the identity") {
    ChannelParams params;  // all defaults neutral
    cvec x(256);
    Rng rng(2);
    for (auto& v : x) v = rng.cnormal();
    const auto y = apply_channel(x, params);
    for (size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("apply_channel is replay-identical for a fixed seed") {
    ChannelParams params = draw_channel_params({}, 6.0, 1234);
    cvec x(512);
    Rng rng(3);
    for (auto& v : x) v = rng.cnormal();
    const auto y1 = apply_channel(x, params);
    const auto y2 = apply_channel(x, params);
    bool identical = true;
    for (size_t i = 0; i < x.size(); ++i)
        identical = identical && y1[i].real() == y2[i].real() && y1[i].imag() == y2[i].imag();
    CHECK(identical);
}

TEST_CASE("apply_channel with only awgn hits the snr label") {
    ChannelParams params;
    params.snr_db = 0.0;
    params.seed = 77;
    cvec x = unit_tone(100000, 0.015);
    const auto y = apply_channel(x, params);
    CHECK(std::abs(empirical_snr_db(x, y)) < 0.1);
}

TEST_CASE("channel parameter draws are deterministic and within ranges") {
    ChannelDrawConfig cfg;
    const auto a = draw_channel_params(cfg, 4.0, 42);
    const auto b = draw_channel_params(cfg, 4.0, 42);
    CHECK(a.cfo == b.cfo);
    CHECK(a.phase == b.phase);
    CHECK(a.timing_eps == b.timing_eps);
    CHECK(std::abs(a.cfo) <= cfg.cfo_max);
    CHECK(a.timing_eps >= 0.0);
    CHECK(a.timing_eps < 1.0);
    CHECK(std::abs(a.sro_ppm) <= cfg.sro_ppm_max);
    CHECK(a.snr_db == 4.0);
}

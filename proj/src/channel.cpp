#include "amc/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace amc {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Jitter and noise consume independent streams derived from the frame seed
// so inserting or removing one stage never shifts the other's draws.
enum : uint64_t { kStreamParams = 1, kStreamJitter = 2, kStreamNoise = 3 };
}  // namespace

double mean_power(std::span<const cdouble> x) {
    double p = 0.0;
    for (const auto& v : x) p += std::norm(v);
    return x.empty() ? 0.0 : p / static_cast<double>(x.size());
}

ChannelParams draw_channel_params(const ChannelDrawConfig& cfg, double snr_db, uint64_t seed) {
    Rng rng(mix_seed(seed, kStreamParams));
    ChannelParams p;
    p.amplitude = rng.uniform(cfg.amplitude_lo, cfg.amplitude_hi);
    p.cfo = rng.uniform(-cfg.cfo_max, cfg.cfo_max);
    p.phase = rng.uniform(0.0, kTwoPi);
    p.jitter_std = cfg.jitter_std;
    p.timing_eps = rng.uniform();
    p.sps = cfg.sps;
    p.sro_ppm = rng.uniform(-cfg.sro_ppm_max, cfg.sro_ppm_max);
    p.snr_db = snr_db;
    p.seed = seed;
    p.fading_taps.resize(static_cast<size_t>(cfg.fading_tap_count));
    double total = 0.0;
    for (int k = 0; k < cfg.fading_tap_count; ++k) {
        const double profile = std::sqrt(std::pow(cfg.fading_decay, k));
        p.fading_taps[static_cast<size_t>(k)] = rng.cnormal() * profile;
        total += std::norm(p.fading_taps[static_cast<size_t>(k)]);
    }
    if (total < 1e-30) {
        p.fading_taps.assign(1, cdouble{1.0, 0.0});
    } else {
        const double scale = 1.0 / std::sqrt(total);
        for (auto& t : p.fading_taps) t *= scale;
    }
    return p;
}

cvec add_awgn(std::span<const cdouble> x, double snr_db, Rng& rng) {
    if (x.empty()) throw std::invalid_argument("add_awgn: empty input");
    if (std::isinf(snr_db) && snr_db > 0) return cvec(x.begin(), x.end());
    const double px = mean_power(x);
    if (px <= 0.0) throw std::invalid_argument("add_awgn: zero-power input with finite SNR");
    const double sigma2 = px / std::pow(10.0, snr_db / 10.0);
    const double comp_std = std::sqrt(sigma2 / 2.0);
    cvec y(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        y[i] = x[i] + cdouble{comp_std * rng.normal(), comp_std * rng.normal()};
    return y;
}

cvec apply_cfo_phase(std::span<const cdouble> x, double cfo, double phase, double jitter_std, Rng& rng) {
    cvec y(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double a = kTwoPi * cfo * static_cast<double>(i) + phase;
        if (jitter_std > 0.0) a += jitter_std * rng.normal();
        y[i] = x[i] * cdouble{std::cos(a), std::sin(a)};
    }
    return y;
}

cvec apply_fading(std::span<const cdouble> x, std::span<const cdouble> taps) {
    if (taps.empty()) throw std::invalid_argument("apply_fading: empty taps");
    cvec y(x.size(), cdouble{0.0, 0.0});
    for (size_t n = 0; n < x.size(); ++n) {
        cdouble acc{0.0, 0.0};
        const size_t kmax = std::min(taps.size(), n + 1);
        for (size_t k = 0; k < kmax; ++k) acc += taps[k] * x[n - k];
        y[n] = acc;
    }
    return y;
}

cvec apply_timing_sro(std::span<const cdouble> x, double eps, int sps, double sro_ppm) {
    if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("apply_timing_sro: eps must be in [0,1)");
    const double delay = eps * sps;
    const double ratio = 1.0 + sro_ppm * 1e-6;
    cvec y(x.size(), cdouble{0.0, 0.0});
    for (size_t m = 0; m < x.size(); ++m) {
        // Receiver clock running at (1+delta) observes the waveform at
        // input position m/ratio; the delay shifts the epoch.
        const double t = static_cast<double>(m) / ratio - delay;
        if (t < 0.0) continue;
        const size_t k = static_cast<size_t>(t);
        if (k + 1 >= x.size()) {
            if (k < x.size()) y[m] = x[k];
            continue;
        }
        const double a = t - static_cast<double>(k);
        y[m] = x[k] * (1.0 - a) + x[k + 1] * a;
    }
    return y;
}

cvec apply_channel_pre_noise(std::span<const cdouble> x, const ChannelParams& params) {
    Rng jitter_rng(mix_seed(params.seed, kStreamJitter));
    cvec y = apply_fading(x, params.fading_taps);
    y = apply_timing_sro(y, params.timing_eps, params.sps, params.sro_ppm);
    y = apply_cfo_phase(y, params.cfo, params.phase, params.jitter_std, jitter_rng);
    if (params.amplitude != 1.0)
        for (auto& v : y) v *= params.amplitude;
    return y;
}

cvec apply_channel(std::span<const cdouble> x, const ChannelParams& params) {
    cvec y = apply_channel_pre_noise(x, params);
    Rng noise_rng(mix_seed(params.seed, kStreamNoise));
    return add_awgn(y, params.snr_db, noise_rng);
}

}  // namespace amc

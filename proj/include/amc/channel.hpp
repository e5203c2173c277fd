#pragma once

// Stochastic channel impairments: amplitude scale, carrier frequency and
// phase offset, per-sample phase jitter, fractional timing offset, sample
// rate offset, multipath fading, and AWGN at an exact per-frame SNR.

#include <limits>
#include <span>
#include <vector>

#include "amc/rng.hpp"
#include "amc/sigsynth.hpp"

namespace amc {

struct ChannelParams {
    double amplitude = 1.0;
    double cfo = 0.0;         // cycles/sample
    double phase = 0.0;       // radians
    double jitter_std = 0.0;  // radians, per-sample
    double timing_eps = 0.0;  // fraction of a symbol, [0, 1)
    int sps = 8;              // converts timing_eps to samples
    cvec fading_taps{cdouble{1.0, 0.0}};
    double sro_ppm = 0.0;
    double snr_db = std::numeric_limits<double>::infinity();
    uint64_t seed = 0;
};

struct ChannelDrawConfig {
    double amplitude_lo = 1.0;
    double amplitude_hi = 1.0;
    double cfo_max = 500e-6;     // uniform in +-cfo_max cycles/sample
    double jitter_std = 0.01;    // radians
    int fading_tap_count = 3;    // Rayleigh taps, exponential power profile
    double fading_decay = 0.5;
    double sro_ppm_max = 50.0;
    int sps = 8;
};

// Draw one impairment realization. Deterministic in (cfg, snr_db, seed).
ChannelParams draw_channel_params(const ChannelDrawConfig& cfg, double snr_db, uint64_t seed);

// Circularly-symmetric complex Gaussian noise with variance
// P_x / 10^(snr_db/10) where P_x is the mean power of this input.
// snr_db = +inf returns the input unchanged. Throws on zero-power input
// with finite SNR.
cvec add_awgn(std::span<const cdouble> x, double snr_db, Rng& rng);

// y[n] = x[n] * exp(j(2*pi*cfo*n + phase + jitter_n)). Magnitude-preserving.
cvec apply_cfo_phase(std::span<const cdouble> x, double cfo, double phase, double jitter_std, Rng& rng);

// Linear convolution with the fading taps, trimmed to the input length.
cvec apply_fading(std::span<const cdouble> x, std::span<const cdouble> taps);

// Fractional delay by eps*sps samples (linear interpolation), then
// resampling so a tone at f is observed at f / (1 + sro_ppm*1e-6);
// output trimmed/padded to the input length.
cvec apply_timing_sro(std::span<const cdouble> x, double eps, int sps, double sro_ppm);

// Full chain in fixed order: fading -> timing/SRO -> amplitude, CFO, phase,
// jitter -> AWGN. Deterministic given params.seed.
cvec apply_channel(std::span<const cdouble> x, const ChannelParams& params);

// Everything in apply_channel except the final AWGN stage; the dataset
// generator adds noise after windowing so the frame's SNR label is exact.
cvec apply_channel_pre_noise(std::span<const cdouble> x, const ChannelParams& params);

double mean_power(std::span<const cdouble> x);

}  // namespace amc

#pragma once

// Noise-free complex baseband waveform synthesis for the ten modulation
// classes. Linear digital classes (PSK/QAM/PAM) go through Gray-coded
// symbol mapping and root-raised-cosine pulse shaping; BFSK/CPFSK are
// continuous-phase frequency modulated; WBFM/AMDSB modulate a synthetic
// audio source.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amc/rng.hpp"

namespace amc {

using cdouble = std::complex<double>;
using cvec = std::vector<cdouble>;

enum class ModType : uint8_t {
    BPSK = 0,
    QPSK = 1,
    PSK8 = 2,
    QAM16 = 3,
    QAM64 = 4,
    BFSK = 5,
    CPFSK = 6,
    PAM4 = 7,
    WBFM = 8,
    AMDSB = 9,
};

inline constexpr int kNumModTypes = 10;

const char* mod_name(ModType m);
std::optional<ModType> mod_from_name(const std::string& name);

// PSK/QAM/PAM: memoryless linear mapping handled by map_bits.
bool is_linear_digital(ModType m);
bool is_analog(ModType m);

// Bits consumed per symbol for linear digital classes.
int bits_per_symbol(ModType m);

// Full constellation, indexed by the bit pattern of the symbol
// (MSB first). Unit average energy over the alphabet.
cvec constellation(ModType m);

struct SymbolStream {
    cvec symbols;
    int sps = 8;  // samples per symbol
};

struct PulseShape {
    double rolloff = 0.35;
    int span = 8;  // filter length in symbols
    std::vector<double> taps;

    // Unit-energy root-raised-cosine filter sampled at sps per symbol.
    static PulseShape root_raised_cosine(double rolloff, int span, int sps);
};

// Gray-coded symbols for a linear digital modulation. Throws if the bit
// count is not a multiple of bits_per_symbol or the class has memory
// (BFSK/CPFSK) or is analog.
SymbolStream map_bits(std::span<const uint8_t> bits, ModType mod, int sps = 8);

// Zero-stuff by sps, convolve with the pulse taps, and trim the result to
// len(symbols)*sps samples centered on the filter delay.
cvec pulse_shape(const SymbolStream& sym, const PulseShape& shape);

// Continuous-phase FSK: one bit per symbol interval, per-sample phase
// increment +-pi*mod_index/sps. Constant envelope |x[n]| = 1.
cvec cpfsk_modulate(std::span<const uint8_t> bits, int sps, double mod_index);

struct AnalogParams {
    double fm_deviation = 0.075;  // WBFM frequency deviation, cycles/sample
    double am_carrier = 1.0;      // AMDSB carrier level
    double am_gain = 0.5;         // AMDSB audio gain
};

// WBFM: unit-envelope phase integration of the audio. AMDSB: real envelope
// carrier + gain*audio. Audio must be normalized to [-1, 1].
cvec analog_modulate(std::span<const double> audio, ModType mod, const AnalogParams& params = {});

struct SourceConfig {
    uint64_t seed = 0;
    // Synthetic audio source: drifting tones plus band-limited noise with
    // random off-time gaps, normalized to [-1, 1].
    int audio_tones = 3;
    double tone_freq_lo = 0.008;  // cycles/sample
    double tone_freq_hi = 0.035;
    double noise_fraction = 0.2;  // noise RMS relative to tone RMS
    double gap_probability = 0.2;
    int gap_segment_lo = 300;
    int gap_segment_hi = 900;
};

std::vector<uint8_t> random_bits(size_t n, Rng& rng);
std::vector<double> synth_audio(size_t n, Rng& rng, const SourceConfig& cfg = {});

struct SynthConfig {
    int sps = 8;
    double rrc_rolloff = 0.35;
    int rrc_span = 8;
    double bfsk_mod_index = 1.0;
    double cpfsk_mod_index = 0.5;
    AnalogParams analog;
    SourceConfig source;
};

// One steady-state waveform of exactly n samples for any modulation class,
// drawing source bits/audio from rng. Filter ramp-in is generated and
// discarded internally.
cvec synth_waveform(ModType mod, size_t n, Rng& rng, const SynthConfig& cfg = {});

}  // namespace amc

#include "amc/sigsynth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// k-th value of the reflected binary Gray sequence.
uint32_t gray_encode(uint32_t k) { return k ^ (k >> 1); }

// PSK alphabet: M points on the unit circle, the point in angular slot k
// carrying bit pattern gray_encode(k), so angular neighbors differ in one
// bit. offset rotates the whole constellation.
cvec psk_points(int m, double offset) {
    cvec pts(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) {
        double a = offset + 2.0 * kPi * k / m;
        pts[gray_encode(static_cast<uint32_t>(k))] = {std::cos(a), std::sin(a)};
    }
    return pts;
}

// Per-axis reflected-Gray amplitude levels {..,-3,-1,1,3,..}, index =
// gray-coded bit pattern.
std::vector<double> gray_pam_levels(int m) {
    std::vector<double> lv(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) lv[gray_encode(static_cast<uint32_t>(k))] = 2.0 * k - (m - 1);
    return lv;
}

cvec qam_points(int bits_per_axis) {
    const int m = 1 << bits_per_axis;
    const auto lv = gray_pam_levels(m);
    // Mean energy per axis is (m^2 - 1) / 3 for levels {+-1, +-3, ...}.
    const double norm = std::sqrt(2.0 * (m * m - 1) / 3.0);
    cvec pts(static_cast<size_t>(m * m));
    for (int bi = 0; bi < m; ++bi)
        for (int bq = 0; bq < m; ++bq)
            pts[static_cast<size_t>((bi << bits_per_axis) | bq)] = {lv[bi] / norm, lv[bq] / norm};
    return pts;
}

cvec pam_points(int bits) {
    const int m = 1 << bits;
    const auto lv = gray_pam_levels(m);
    const double norm = std::sqrt((m * m - 1) / 3.0);
    cvec pts(static_cast<size_t>(m));
    for (int b = 0; b < m; ++b) pts[static_cast<size_t>(b)] = {lv[b] / norm, 0.0};
    return pts;
}

}  // namespace

const char* mod_name(ModType m) {
    switch (m) {
        case ModType::BPSK: return "BPSK";
        case ModType::QPSK: return "QPSK";
        case ModType::PSK8: return "8PSK";
        case ModType::QAM16: return "QAM16";
        case ModType::QAM64: return "QAM64";
        case ModType::BFSK: return "BFSK";
        case ModType::CPFSK: return "CPFSK";
        case ModType::PAM4: return "PAM4";
        case ModType::WBFM: return "WBFM";
        case ModType::AMDSB: return "AMDSB";
    }
    return "?";
}

std::optional<ModType> mod_from_name(const std::string& name) {
    for (int i = 0; i < kNumModTypes; ++i) {
        ModType m = static_cast<ModType>(i);
        std::string n = mod_name(m);
        std::string upper = name;
        std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
        if (upper == n) return m;
    }
    if (name == "PSK8" || name == "psk8") return ModType::PSK8;
    return std::nullopt;
}

bool is_linear_digital(ModType m) {
    switch (m) {
        case ModType::BPSK:
        case ModType::QPSK:
        case ModType::PSK8:
        case ModType::QAM16:
        case ModType::QAM64:
        case ModType::PAM4: return true;
        default: return false;
    }
}

bool is_analog(ModType m) { return m == ModType::WBFM || m == ModType::AMDSB; }

int bits_per_symbol(ModType m) {
    switch (m) {
        case ModType::BPSK: return 1;
        case ModType::QPSK: return 2;
        case ModType::PSK8: return 3;
        case ModType::QAM16: return 4;
        case ModType::QAM64: return 6;
        case ModType::PAM4: return 2;
        case ModType::BFSK:
        case ModType::CPFSK: return 1;
        default: throw std::invalid_argument(std::string("bits_per_symbol: not digital: ") + mod_name(m));
    }
}

cvec constellation(ModType m) {
    switch (m) {
        case ModType::BPSK: return psk_points(2, 0.0);  // bit 0 -> +1, bit 1 -> -1
        case ModType::QPSK: return psk_points(4, kPi / 4.0);
        case ModType::PSK8: return psk_points(8, 0.0);
        case ModType::QAM16: return qam_points(2);
        case ModType::QAM64: return qam_points(3);
        case ModType::PAM4: return pam_points(2);
        default: throw std::invalid_argument(std::string("constellation: not a linear digital type: ") + mod_name(m));
    }
}

PulseShape PulseShape::root_raised_cosine(double rolloff, int span, int sps) {
    if (rolloff <= 0.0 || rolloff >= 1.0) throw std::invalid_argument("rrc: rolloff must be in (0,1)");
    if (span < 1 || sps < 2) throw std::invalid_argument("rrc: span >= 1 and sps >= 2 required");
    PulseShape ps;
    ps.rolloff = rolloff;
    ps.span = span;
    const int n = span * sps + 1;  // odd length, symmetric around t = 0
    ps.taps.resize(static_cast<size_t>(n));
    const double b = rolloff;
    for (int i = 0; i < n; ++i) {
        const double t = (i - span * sps / 2) / static_cast<double>(sps);  // symbol units
        double h;
        if (std::abs(t) < 1e-12) {
            h = 1.0 - b + 4.0 * b / kPi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
            h = (b / std::sqrt(2.0)) * ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                                        (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            const double num = std::sin(kPi * t * (1.0 - b)) + 4.0 * b * t * std::cos(kPi * t * (1.0 + b));
            const double den = kPi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t));
            h = num / den;
        }
        ps.taps[static_cast<size_t>(i)] = h;
    }
    double e = 0.0;
    for (double h : ps.taps) e += h * h;
    const double scale = 1.0 / std::sqrt(e);
    for (double& h : ps.taps) h *= scale;
    return ps;
}

SymbolStream map_bits(std::span<const uint8_t> bits, ModType mod, int sps) {
    if (!is_linear_digital(mod))
        throw std::invalid_argument(std::string("map_bits: unsupported modulation ") + mod_name(mod) +
                                    " (handled by a dedicated modulator)");
    const int bps = bits_per_symbol(mod);
    if (bits.size() % static_cast<size_t>(bps) != 0)
        throw std::invalid_argument("map_bits: bit count not divisible by bits per symbol");
    const cvec pts = constellation(mod);
    SymbolStream out;
    out.sps = sps;
    out.symbols.reserve(bits.size() / static_cast<size_t>(bps));
    for (size_t i = 0; i < bits.size(); i += static_cast<size_t>(bps)) {
        uint32_t pattern = 0;
        for (int b = 0; b < bps; ++b) pattern = (pattern << 1) | (bits[i + static_cast<size_t>(b)] & 1u);
        out.symbols.push_back(pts[pattern]);
    }
    return out;
}

cvec pulse_shape(const SymbolStream& sym, const PulseShape& shape) {
    if (shape.taps.empty()) throw std::invalid_argument("pulse_shape: empty taps");
    if (sym.symbols.empty()) throw std::invalid_argument("pulse_shape: empty symbol stream");
    const size_t n_up = sym.symbols.size() * static_cast<size_t>(sym.sps);
    const size_t n_full = n_up + shape.taps.size() - 1;
    cvec full(n_full, cdouble{0.0, 0.0});
    // Zero-stuffed upsampling folded into the convolution: only every
    // sps-th input sample is nonzero.
    for (size_t k = 0; k < sym.symbols.size(); ++k) {
        const cdouble s = sym.symbols[k];
        const size_t base = k * static_cast<size_t>(sym.sps);
        for (size_t j = 0; j < shape.taps.size(); ++j) full[base + j] += s * shape.taps[j];
    }
    const size_t trim = (n_full - n_up) / 2;
    return cvec(full.begin() + static_cast<ptrdiff_t>(trim), full.begin() + static_cast<ptrdiff_t>(trim + n_up));
}

cvec cpfsk_modulate(std::span<const uint8_t> bits, int sps, double mod_index) {
    if (mod_index <= 0.0) throw std::invalid_argument("cpfsk_modulate: mod_index must be > 0");
    cvec out;
    out.reserve(bits.size() * static_cast<size_t>(sps));
    double phase = 0.0;
    const double step = kPi * mod_index / sps;
    for (uint8_t bit : bits) {
        const double d = (bit & 1u) ? step : -step;
        for (int i = 0; i < sps; ++i) {
            phase += d;
            if (phase > kPi) phase -= 2.0 * kPi;
            if (phase < -kPi) phase += 2.0 * kPi;
            out.emplace_back(std::cos(phase), std::sin(phase));
        }
    }
    return out;
}

cvec analog_modulate(std::span<const double> audio, ModType mod, const AnalogParams& params) {
    cvec out(audio.size());
    if (mod == ModType::WBFM) {
        double phase = 0.0;
        for (size_t i = 0; i < audio.size(); ++i) {
            phase += 2.0 * kPi * params.fm_deviation * audio[i];
            if (phase > kPi) phase -= 2.0 * kPi;
            if (phase < -kPi) phase += 2.0 * kPi;
            out[i] = {std::cos(phase), std::sin(phase)};
        }
    } else if (mod == ModType::AMDSB) {
        for (size_t i = 0; i < audio.size(); ++i) out[i] = {params.am_carrier + params.am_gain * audio[i], 0.0};
    } else {
        throw std::invalid_argument(std::string("analog_modulate: not analog: ") + mod_name(mod));
    }
    return out;
}

std::vector<uint8_t> random_bits(size_t n, Rng& rng) {
    std::vector<uint8_t> bits(n);
    for (auto& b : bits) b = rng.bit() ? 1 : 0;
    return bits;
}

std::vector<double> synth_audio(size_t n, Rng& rng, const SourceConfig& cfg) {
    std::vector<double> audio(n, 0.0);
    // Drifting tones.
    struct Tone {
        double freq, phase, amp;
    };
    std::vector<Tone> tones(static_cast<size_t>(cfg.audio_tones));
    for (auto& t : tones) {
        t.freq = rng.uniform(cfg.tone_freq_lo, cfg.tone_freq_hi);
        t.phase = rng.uniform(0.0, 2.0 * kPi);
        t.amp = rng.uniform(0.5, 1.0);
    }
    const double drift_std = 1e-5;
    for (size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (auto& t : tones) {
            t.freq = std::clamp(t.freq + drift_std * rng.normal(), cfg.tone_freq_lo, cfg.tone_freq_hi);
            t.phase += 2.0 * kPi * t.freq;
            v += t.amp * std::sin(t.phase);
        }
        audio[i] = v;
    }
    // Band-limited noise: white Gaussian through two one-pole lowpass stages.
    double tone_rms = 0.0;
    for (double v : audio) tone_rms += v * v;
    tone_rms = std::sqrt(tone_rms / static_cast<double>(n));
    const double alpha = 0.15;
    double s1 = 0.0, s2 = 0.0, noise_pow = 0.0;
    std::vector<double> noise(n);
    for (size_t i = 0; i < n; ++i) {
        s1 += alpha * (rng.normal() - s1);
        s2 += alpha * (s1 - s2);
        noise[i] = s2;
        noise_pow += s2 * s2;
    }
    const double noise_rms = std::sqrt(noise_pow / static_cast<double>(n));
    if (noise_rms > 1e-12) {
        const double g = cfg.noise_fraction * tone_rms / noise_rms;
        for (size_t i = 0; i < n; ++i) audio[i] += g * noise[i];
    }
    // Off-time gaps with short linear ramps.
    const int ramp = 16;
    size_t pos = 0;
    while (pos < n) {
        const size_t seg = static_cast<size_t>(cfg.gap_segment_lo) +
                           rng.below(static_cast<uint64_t>(cfg.gap_segment_hi - cfg.gap_segment_lo + 1));
        const size_t end = std::min(n, pos + seg);
        if (rng.uniform() < cfg.gap_probability) {
            for (size_t i = pos; i < end; ++i) {
                double g = 0.0;
                if (i < pos + static_cast<size_t>(ramp)) g = 1.0 - static_cast<double>(i - pos) / ramp;
                if (i + static_cast<size_t>(ramp) >= end) g = std::max(g, 1.0 - static_cast<double>(end - 1 - i) / ramp);
                audio[i] *= g;
            }
        }
        pos = end;
    }
    double peak = 0.0;
    for (double v : audio) peak = std::max(peak, std::abs(v));
    if (peak > 1e-12)
        for (double& v : audio) v /= peak;
    return audio;
}

cvec synth_waveform(ModType mod, size_t n, Rng& rng, const SynthConfig& cfg) {
    if (n == 0) return {};
    if (is_linear_digital(mod)) {
        const PulseShape shape = PulseShape::root_raised_cosine(cfg.rrc_rolloff, cfg.rrc_span, cfg.sps);
        // Extra symbols cover the filter ramp at both ends.
        const size_t n_sym =
            (n + static_cast<size_t>(cfg.sps) - 1) / static_cast<size_t>(cfg.sps) + static_cast<size_t>(2 * cfg.rrc_span);
        const auto bits = random_bits(n_sym * static_cast<size_t>(bits_per_symbol(mod)), rng);
        const cvec wave = pulse_shape(map_bits(bits, mod, cfg.sps), shape);
        const size_t skip = static_cast<size_t>(cfg.rrc_span * cfg.sps / 2);
        return cvec(wave.begin() + static_cast<ptrdiff_t>(skip), wave.begin() + static_cast<ptrdiff_t>(skip + n));
    }
    if (mod == ModType::BFSK || mod == ModType::CPFSK) {
        const double h = (mod == ModType::BFSK) ? cfg.bfsk_mod_index : cfg.cpfsk_mod_index;
        const size_t n_bits = (n + static_cast<size_t>(cfg.sps) - 1) / static_cast<size_t>(cfg.sps) + 1;
        const auto bits = random_bits(n_bits, rng);
        cvec wave = cpfsk_modulate(bits, cfg.sps, h);
        wave.resize(n);
        return wave;
    }
    const auto audio = synth_audio(n, rng, cfg.source);
    return analog_modulate(audio, mod, cfg.analog);
}

}  // namespace amc

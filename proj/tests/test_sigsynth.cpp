#include <cmath>

#include "amc/sigsynth.hpp"
#include "doctest.h"
#include "testing_util.hpp"

using namespace amc;
using amctest::estimate_frequency;
using amctest::occupied_bandwidth;
using amctest::popcount32;

namespace {
std::vector<uint8_t> bits_from(std::initializer_list<int> l) {
    std::vector<uint8_t> b;
    for (int v : l) b.push_back(static_cast<uint8_t>(v));
    return b;
}
}  // namespace

TEST_CASE("bpsk mapping is antipodal") {
    const auto s0 = map_bits(bits_from({0}), ModType::BPSK);
    const auto s1 = map_bits(bits_from({1}), ModType::BPSK);
    CHECK(std::abs(s0.symbols[0] - cdouble{1.0, 0.0}) < 1e-12);
    CHECK(std::abs(s1.symbols[0] - cdouble{-1.0, 0.0}) < 1e-12);
}

TEST_CASE("qpsk gray map, unit energy") {
    const auto s = map_bits(bits_from({0, 0}), ModType::QPSK);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(s.symbols[0] - cdouble{r, r}) < 1e-12);
}

TEST_CASE("qam16 levels and mean energy") {
    const auto pts = constellation(ModType::QAM16);
    REQUIRE(pts.size() == 16);
    double energy = 0.0;
    const double step = 2.0 / std::sqrt(10.0);
    for (const auto& p : pts) {
        energy += std::norm(p);
        // levels are {+-1, +-3}/sqrt(10) per axis
        const double li = p.real() / (step / 2.0);
        const double lq = p.imag() / (step / 2.0);
        CHECK(std::abs(li - std::round(li)) < 1e-9);
        CHECK(std::abs(lq - std::round(lq)) < 1e-9);
        CHECK(std::abs(std::round(li)) <= 3);
    }
    CHECK(energy / 16.0 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("all digital constellations have unit average energy") {
    for (ModType m : {ModType::BPSK, ModType::QPSK, ModType::PSK8, ModType::QAM16, ModType::QAM64,
                      ModType::PAM4}) {
        const auto pts = constellation(m);
        double energy = 0.0;
        for (const auto& p : pts) energy += std::norm(p);
        CHECK(std::abs(energy / static_cast<double>(pts.size()) - 1.0) < 1e-6);
    }
}

TEST_CASE("gray property: nearest neighbors differ in exactly one bit") {
    for (ModType m : {ModType::BPSK, ModType::QPSK, ModType::PSK8, ModType::QAM16, ModType::QAM64,
                      ModType::PAM4}) {
        const auto pts = constellation(m);
        const size_t n = pts.size();
        double min_d = 1e9;
        for (size_t a = 0; a < n; ++a)
            for (size_t b = a + 1; b < n; ++b) min_d = std::min(min_d, std::abs(pts[a] - pts[b]));
        for (size_t a = 0; a < n; ++a) {
            for (size_t b = a + 1; b < n; ++b) {
                if (std::abs(pts[a] - pts[b]) < min_d * 1.001) {
                    CHECK(popcount32(static_cast<uint32_t>(a ^ b)) == 1);
                }
            }
        }
    }
}

TEST_CASE("map_bits errors") {
    CHECK_THROWS(map_bits(bits_from({0}), ModType::QPSK));       // length mismatch
    CHECK_THROWS(map_bits(bits_from({0, 1}), ModType::CPFSK));   // dedicated modulator
    CHECK_THROWS(map_bits(bits_from({0, 1}), ModType::WBFM));    // analog
}

TEST_CASE("rrc taps are symmetric with unit energy") {
    const auto ps = PulseShape::root_raised_cosine(0.35, 8, 8);
    REQUIRE(ps.taps.size() == 65);
    double e = 0.0;
    for (size_t i = 0; i < ps.taps.size(); ++i) {
        e += ps.taps[i] * ps.taps[i];
        CHECK(ps.taps[i] == doctest::Approx(ps.taps[ps.taps.size() - 1 - i]).epsilon(1e-12));
    }
    CHECK(std::abs(e - 1.0) < 1e-6);
}

TEST_CASE("pulse_shape of a single unit symbol is the centered tap window") {
    const auto ps = PulseShape::root_raised_cosine(0.35, 8, 8);
    SymbolStream sym;
    sym.sps = 8;
    sym.symbols = {cdouble{1.0, 0.0}};
    const auto wave = pulse_shape(sym, ps);
    REQUIRE(wave.size() == 8);
    const size_t trim = (ps.taps.size() - 1) / 2;  // center window of the 72-long convolution
    for (size_t i = 0; i < wave.size(); ++i)
        CHECK(wave[i].real() == doctest::Approx(ps.taps[trim + i]).epsilon(1e-12));
}

TEST_CASE("pulse_shape of zero symbols is zero") {
    const auto ps = PulseShape::root_raised_cosine(0.35, 8, 8);
    SymbolStream sym;
    sym.sps = 8;
    sym.symbols.assign(16, cdouble{0.0, 0.0});
    for (const auto& v : pulse_shape(sym, ps)) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("rrc bpsk occupied bandwidth lands near (1+rolloff)/(2 sps)") {
    Rng rng(42);
    SynthConfig cfg;
    const auto wave = synth_waveform(ModType::BPSK, 1 << 15, rng, cfg);
    const double bw = occupied_bandwidth(wave, 0.99);
    // Expected about 0.084 of the sample rate; paper bound band [1/16, 1/9].
    CHECK(bw > 1.0 / 16.0);
    CHECK(bw < 1.0 / 9.0);
}

TEST_CASE("cpfsk all-zero bits is a tone at -h/(2 sps)") {
    std::vector<uint8_t> zeros(64, 0);
    const auto wave = cpfsk_modulate(zeros, 8, 0.5);
    CHECK(estimate_frequency(wave) == doctest::Approx(-0.5 / 16.0).epsilon(1e-9));
}

TEST_CASE("cpfsk has constant envelope and continuous phase") {
    Rng rng(1);
    const auto bits = random_bits(256, rng);
    const auto wave = cpfsk_modulate(bits, 8, 1.0);
    for (const auto& v : wave) CHECK(std::abs(std::abs(v) - 1.0) < 1e-9);
    for (size_t i = 1; i < wave.size(); ++i) {
        const double dphi = std::arg(wave[i] * std::conj(wave[i - 1]));
        CHECK(std::abs(dphi) < M_PI * 0.999);
    }
}

TEST_CASE("cpfsk alternating bits flips instantaneous frequency with bit period") {
    std::vector<uint8_t> bits;
    for (int i = 0; i < 32; ++i) bits.push_back(static_cast<uint8_t>(i % 2));
    const auto wave = cpfsk_modulate(bits, 8, 0.5);
    // Phase-difference sign within bit k follows the bit value.
    for (size_t i = 1; i < wave.size(); ++i) {
        const double dphi = std::arg(wave[i] * std::conj(wave[i - 1]));
        const int bit = bits[(i) / 8];
        if (i % 8 != 0) {  // interior of a bit period
            CHECK((bit == 1 ? dphi > 0 : dphi < 0));
        }
    }
}

TEST_CASE("silent audio analog cases") {
    std::vector<double> silent(64, 0.0);
    const auto fm = analog_modulate(silent, ModType::WBFM);
    const auto am = analog_modulate(silent, ModType::AMDSB);
    for (const auto& v : fm) CHECK(std::abs(v - cdouble{1.0, 0.0}) < 1e-12);
    for (const auto& v : am) CHECK(std::abs(v - cdouble{1.0, 0.0}) < 1e-12);
}

TEST_CASE("wbfm envelope is exactly unit magnitude") {
    Rng rng(3);
    const auto audio = synth_audio(4096, rng);
    const auto wave = analog_modulate(audio, ModType::WBFM);
    for (const auto& v : wave) CHECK(std::abs(std::abs(v) - 1.0) < 1e-9);
}

TEST_CASE("wbfm single-tone occupancy follows carson's rule") {
    const double fa = 0.02, dev = 0.075;
    std::vector<double> audio(1 << 15);
    for (size_t i = 0; i < audio.size(); ++i) audio[i] = std::sin(2.0 * M_PI * fa * static_cast<double>(i));
    AnalogParams params;
    params.fm_deviation = dev;
    const auto wave = analog_modulate(audio, ModType::WBFM, params);
    const double occupancy = 2.0 * occupied_bandwidth(wave, 0.98);
    const double carson = 2.0 * (dev + fa);
    CHECK(std::abs(occupancy - carson) / carson < 0.15);
}

TEST_CASE("audio source is normalized and bits are balanced") {
    Rng rng(17);
    const auto audio = synth_audio(20000, rng);
    double peak = 0.0;
    for (double v : audio) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 1.0 + 1e-12);

    Rng rng2(23);
    const auto bits = random_bits(100000, rng2);
    size_t ones = 0;
    for (uint8_t b : bits) ones += b;
    const double frac = static_cast<double>(ones) / static_cast<double>(bits.size());
    CHECK(frac > 0.49);
    CHECK(frac < 0.51);
}

TEST_CASE("waveform synthesis is deterministic in the seed") {
    for (int mi = 0; mi < kNumModTypes; ++mi) {
        const ModType m = static_cast<ModType>(mi);
        Rng a(mix_seed(99, static_cast<uint64_t>(mi)));
        Rng b(mix_seed(99, static_cast<uint64_t>(mi)));
        const auto wa = synth_waveform(m, 512, a);
        const auto wb = synth_waveform(m, 512, b);
        REQUIRE(wa.size() == wb.size());
        bool identical = true;
        for (size_t i = 0; i < wa.size(); ++i)
            identical = identical && wa[i].real() == wb[i].real() && wa[i].imag() == wb[i].imag();
        CHECK(identical);
    }
}

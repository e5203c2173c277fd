#pragma once

// Labeled 2xL frame datasets: windowing, balanced generation over the
// (modulation, SNR) grid, stratified splitting, and a checksummed binary
// file format with a JSON metadata sidecar.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "amc/channel.hpp"
#include "amc/sigsynth.hpp"

namespace amc {

inline constexpr int kDefaultFrameLen = 128;
inline constexpr int kSnrCount = 20;

// The SNR grid {-20, -18, ..., 18} dB.
inline constexpr std::array<int, kSnrCount> snr_grid() {
    std::array<int, kSnrCount> g{};
    for (int i = 0; i < kSnrCount; ++i) g[static_cast<size_t>(i)] = -20 + 2 * i;
    return g;
}

inline bool snr_on_grid(int snr_db) { return snr_db >= -20 && snr_db <= 18 && ((snr_db + 20) % 2 == 0); }

// One 2xL real frame; row 0 holds I, row 1 holds Q, stored row-major.
struct IQFrame {
    int len = 0;
    std::vector<float> data;  // size 2*len

    IQFrame() = default;
    explicit IQFrame(int l) : len(l), data(static_cast<size_t>(2 * l), 0.0f) {}

    float& i_at(int n) { return data[static_cast<size_t>(n)]; }
    float& q_at(int n) { return data[static_cast<size_t>(len + n)]; }
    float i_at(int n) const { return data[static_cast<size_t>(n)]; }
    float q_at(int n) const { return data[static_cast<size_t>(len + n)]; }

    bool operator==(const IQFrame&) const = default;
};

struct LabeledExample {
    IQFrame frame;
    ModType mod = ModType::BPSK;
    int8_t snr_db = 0;

    bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    int frame_len = kDefaultFrameLen;
    uint64_t seed = 0;
    std::string meta_digest;  // hex config digest; empty for ad-hoc sets

    bool operator==(const Dataset&) const = default;
};

// Slide a frame_len window by shift over the stream; trailing partial
// windows are discarded. Complex samples split into I and Q rows.
std::vector<IQFrame> window_frames(std::span<const cdouble> stream, int frame_len = kDefaultFrameLen,
                                   int shift = 64);

struct GenerationConfig {
    int total_examples = 20000;
    int frame_len = kDefaultFrameLen;
    uint64_t seed = 1;
    int margin = 64;  // steady-state samples kept on each side before windowing
    SynthConfig synth;
    ChannelDrawConfig channel;

    std::string canonical_string() const;
    std::string digest() const;
};

// Balanced dataset over 10 modulations x 20 SNRs; per-cell counts within
// +-1 of each other. Each example is an independent waveform + channel
// draw with a single window taken, so the SNR label is exact per frame.
Dataset generate_dataset(const GenerationConfig& cfg);

// Stratified split: each (mod, snr) cell splits independently at
// train_fraction. Throws (naming the cell) when a cell is too small.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, uint64_t seed);

// Binary format, all little-endian:
//   magic "MODC" | u16 version | u32 example count | u16 frame_len |
//   records (u8 mod, i8 snr, 2*frame_len f32) | u64 fnv1a checksum of all
//   preceding bytes.
// save() also writes "<path>.json" with human-readable metadata.
void save(const Dataset& ds, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

// Per-(mod, snr) example counts, indexed [mod][snr_index].
std::array<std::array<int, kSnrCount>, kNumModTypes> cell_counts(const Dataset& ds);

inline int snr_index(int snr_db) { return (snr_db + 20) / 2; }

}  // namespace amc

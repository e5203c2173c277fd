#include "amc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "amc/serialize.hpp"
#include "json.hpp"

namespace amc {

namespace {
constexpr char kMagic[4] = {'M', 'O', 'D', 'C'};
constexpr uint16_t kVersion = 1;
}  // namespace

std::vector<IQFrame> window_frames(std::span<const cdouble> stream, int frame_len, int shift) {
    if (frame_len <= 0) throw std::invalid_argument("window_frames: frame_len must be > 0");
    if (shift <= 0 || shift > frame_len) throw std::invalid_argument("window_frames: need 0 < shift <= frame_len");
    std::vector<IQFrame> frames;
    for (size_t start = 0; start + static_cast<size_t>(frame_len) <= stream.size();
         start += static_cast<size_t>(shift)) {
        IQFrame f(frame_len);
        for (int n = 0; n < frame_len; ++n) {
            f.i_at(n) = static_cast<float>(stream[start + static_cast<size_t>(n)].real());
            f.q_at(n) = static_cast<float>(stream[start + static_cast<size_t>(n)].imag());
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

std::string GenerationConfig::canonical_string() const {
    nlohmann::json j;
    j["total_examples"] = total_examples;
    j["frame_len"] = frame_len;
    j["seed"] = seed;
    j["margin"] = margin;
    j["synth"] = {{"sps", synth.sps},
                  {"rrc_rolloff", synth.rrc_rolloff},
                  {"rrc_span", synth.rrc_span},
                  {"bfsk_mod_index", synth.bfsk_mod_index},
                  {"cpfsk_mod_index", synth.cpfsk_mod_index},
                  {"fm_deviation", synth.analog.fm_deviation},
                  {"am_carrier", synth.analog.am_carrier},
                  {"am_gain", synth.analog.am_gain}};
    j["channel"] = {{"amplitude_lo", channel.amplitude_lo},
                    {"amplitude_hi", channel.amplitude_hi},
                    {"cfo_max", channel.cfo_max},
                    {"jitter_std", channel.jitter_std},
                    {"fading_tap_count", channel.fading_tap_count},
                    {"fading_decay", channel.fading_decay},
                    {"sro_ppm_max", channel.sro_ppm_max},
                    {"sps", channel.sps}};
    return j.dump();
}

std::string GenerationConfig::digest() const {
    const std::string s = canonical_string();
    return hex64(fnv1a64(s.data(), s.size()));
}

Dataset generate_dataset(const GenerationConfig& cfg) {
    if (cfg.total_examples <= 0) throw std::invalid_argument("generate_dataset: total_examples must be > 0");
    const int total_len = cfg.frame_len + 2 * cfg.margin;
    const auto grid = snr_grid();
    Dataset ds;
    ds.frame_len = cfg.frame_len;
    ds.seed = cfg.seed;
    ds.meta_digest = cfg.digest();
    ds.examples.resize(static_cast<size_t>(cfg.total_examples));

    const int cells = kNumModTypes * kSnrCount;
    for (int idx = 0; idx < cfg.total_examples; ++idx) {
        // Round-robin over cells keeps per-cell counts within +-1 for any
        // total; mod-major, SNR-minor.
        const int cell = idx % cells;
        const ModType mod = static_cast<ModType>(cell / kSnrCount);
        const int snr_db = grid[static_cast<size_t>(cell % kSnrCount)];

        const uint64_t ex_seed = mix_seed(cfg.seed, static_cast<uint64_t>(idx));
        Rng source_rng(mix_seed(ex_seed, 101));
        const cvec clean = synth_waveform(mod, static_cast<size_t>(total_len), source_rng, cfg.synth);

        ChannelParams params = draw_channel_params(cfg.channel, snr_db, mix_seed(ex_seed, 202));
        const cvec impaired = apply_channel_pre_noise(clean, params);

        // Single window from the steady-state interior, then noise scaled
        // to this window's own power: the SNR label is exact by construction.
        std::span<const cdouble> window(impaired.data() + cfg.margin, static_cast<size_t>(cfg.frame_len));
        Rng noise_rng(mix_seed(ex_seed, 303));
        const cvec noisy = add_awgn(window, snr_db, noise_rng);

        LabeledExample& ex = ds.examples[static_cast<size_t>(idx)];
        ex.mod = mod;
        ex.snr_db = static_cast<int8_t>(snr_db);
        ex.frame = IQFrame(cfg.frame_len);
        for (int n = 0; n < cfg.frame_len; ++n) {
            ex.frame.i_at(n) = static_cast<float>(noisy[static_cast<size_t>(n)].real());
            ex.frame.q_at(n) = static_cast<float>(noisy[static_cast<size_t>(n)].imag());
        }
    }
    return ds;
}

std::array<std::array<int, kSnrCount>, kNumModTypes> cell_counts(const Dataset& ds) {
    std::array<std::array<int, kSnrCount>, kNumModTypes> counts{};
    for (const auto& ex : ds.examples)
        counts[static_cast<size_t>(ex.mod)][static_cast<size_t>(snr_index(ex.snr_db))]++;
    return counts;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("split: train_fraction must be in (0,1)");

    // Bucket example indices per cell, preserving dataset order.
    std::array<std::array<std::vector<uint32_t>, kSnrCount>, kNumModTypes> buckets;
    for (uint32_t i = 0; i < ds.examples.size(); ++i) {
        const auto& ex = ds.examples[i];
        buckets[static_cast<size_t>(ex.mod)][static_cast<size_t>(snr_index(ex.snr_db))].push_back(i);
    }

    std::vector<char> in_train(ds.examples.size(), 0);
    for (int m = 0; m < kNumModTypes; ++m) {
        for (int s = 0; s < kSnrCount; ++s) {
            auto& idx = buckets[static_cast<size_t>(m)][static_cast<size_t>(s)];
            if (idx.empty()) continue;
            const size_t n = idx.size();
            const size_t k = static_cast<size_t>(std::llround(static_cast<double>(n) * train_fraction));
            if (k == 0 || k >= n) {
                std::ostringstream msg;
                msg << "split: cell (" << mod_name(static_cast<ModType>(m)) << ", " << (-20 + 2 * s)
                    << " dB) with " << n << " example(s) cannot be split at fraction " << train_fraction;
                throw std::runtime_error(msg.str());
            }
            // Per-cell Fisher-Yates with a cell-specific stream.
            Rng rng(mix_seed(seed, static_cast<uint64_t>(m * kSnrCount + s)));
            for (size_t i = n - 1; i > 0; --i) {
                const size_t j = static_cast<size_t>(rng.below(i + 1));
                std::swap(idx[i], idx[j]);
            }
            for (size_t i = 0; i < k; ++i) in_train[idx[i]] = 1;
        }
    }

    Dataset train, test;
    train.frame_len = test.frame_len = ds.frame_len;
    train.seed = test.seed = ds.seed;
    train.meta_digest = test.meta_digest = ds.meta_digest;
    for (size_t i = 0; i < ds.examples.size(); ++i)
        (in_train[i] ? train : test).examples.push_back(ds.examples[i]);
    return {std::move(train), std::move(test)};
}

void save(const Dataset& ds, const std::filesystem::path& path) {
    ByteWriter w;
    w.bytes(kMagic, 4);
    w.u16(kVersion);
    w.u32(static_cast<uint32_t>(ds.examples.size()));
    w.u16(static_cast<uint16_t>(ds.frame_len));
    for (const auto& ex : ds.examples) {
        if (ex.frame.len != ds.frame_len) throw std::runtime_error("save: frame length mismatch in dataset");
        w.u8(static_cast<uint8_t>(ex.mod));
        w.i8(ex.snr_db);
        for (float v : ex.frame.data) w.f32(v);
    }
    w.u64(fnv1a64(w.data().data(), w.size()));
    atomic_write_file(path, w.data());

    nlohmann::json meta;
    meta["format"] = "MODC";
    meta["version"] = kVersion;
    meta["examples"] = ds.examples.size();
    meta["frame_len"] = ds.frame_len;
    meta["seed"] = ds.seed;
    meta["config_digest"] = ds.meta_digest;
    std::filesystem::path side = path;
    side += ".json";
    atomic_write_file(side, meta.dump(2) + "\n");
}

Dataset load(const std::filesystem::path& path) {
    const std::vector<uint8_t> buf = read_file(path);
    if (buf.size() < 4 + 2 + 4 + 2 + 8) throw std::runtime_error("load: file too short: " + path.string());
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw std::runtime_error("load: bad magic (not a MODC dataset): " + path.string());
    const uint64_t stored = ByteReader(buf.data() + buf.size() - 8, 8).u64();
    const uint64_t actual = fnv1a64(buf.data(), buf.size() - 8);
    if (stored != actual) throw std::runtime_error("load: checksum mismatch (corrupted file): " + path.string());

    ByteReader r(buf.data(), buf.size() - 8);
    char magic[4];
    r.bytes(magic, 4);
    const uint16_t version = r.u16();
    if (version != kVersion) throw std::runtime_error("load: unsupported dataset version");
    const uint32_t count = r.u32();
    const uint16_t frame_len = r.u16();

    Dataset ds;
    ds.frame_len = frame_len;
    ds.examples.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        LabeledExample& ex = ds.examples[i];
        const uint8_t mod = r.u8();
        if (mod >= kNumModTypes) throw std::runtime_error("load: invalid modulation code");
        ex.mod = static_cast<ModType>(mod);
        ex.snr_db = r.i8();
        ex.frame = IQFrame(frame_len);
        for (float& v : ex.frame.data) v = r.f32();
    }
    if (r.remaining() != 0) throw std::runtime_error("load: trailing bytes in dataset file");

    // Sidecar is informational; restore digest/seed when present.
    std::filesystem::path side = path;
    side += ".json";
    if (std::filesystem::exists(side)) {
        try {
            const auto buf2 = read_file(side);
            const auto meta = nlohmann::json::parse(buf2.begin(), buf2.end());
            ds.seed = meta.value("seed", uint64_t{0});
            ds.meta_digest = meta.value("config_digest", std::string{});
        } catch (const std::exception&) {
            // ignore unreadable sidecar
        }
    }
    return ds;
}

}  // namespace amc

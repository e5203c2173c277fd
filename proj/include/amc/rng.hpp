#pragma once

// Self-contained deterministic random number generation. The standard
// library's distribution objects are implementation-defined, so every draw
// here is spelled out explicitly: identical seeds give identical streams on
// any platform, which the dataset and training replay contracts rely on.

#include <cmath>
#include <complex>
#include <cstdint>

namespace amc {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive an independent stream seed from a base seed and a stream index.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0x9e3779b97f4a7c15ull + stream * 0xd1b54a32d192ed03ull);
    splitmix64(s);
    return splitmix64(s);
}

// xoshiro256++ with splitmix64 seeding.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0,n) by rejection.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    bool bit() { return (next_u64() >> 63) != 0; }

    // Standard normal via Box-Muller; generates in pairs and caches the spare.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    std::complex<double> cnormal() {
        const double s = 0.70710678118654752440;
        double re = normal();
        double im = normal();
        return {re * s, im * s};
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stateless counter-based uniform in [0,1); used for dropout masks so the
// mask is a pure function of (seed, step, index) regardless of threading.
inline double hash_uniform(uint64_t seed, uint64_t step, uint64_t index) {
    uint64_t s = seed;
    s ^= 0x632be59bd9b4e019ull + step * 0x9e3779b97f4a7c15ull;
    splitmix64(s);
    s ^= index * 0xd1b54a32d192ed03ull;
    uint64_t z = splitmix64(s);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace amc

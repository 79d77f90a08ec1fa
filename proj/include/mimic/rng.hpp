#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <span>
#include <string_view>

namespace mimic {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Deterministic RNG. Normal draws are hand-rolled Box-Muller so generated
// artifacts are bit-stable across standard libraries (std::normal_distribution
// is implementation-defined). Named substreams let independent components
// (env, policy, cvae) consume randomness without perturbing each other.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    static Rng stream(uint64_t seed, std::string_view tag, uint64_t index = 0) {
        uint64_t s = seed;
        splitmix64(s);
        s ^= fnv1a64(tag);
        splitmix64(s);
        s ^= index * 0x9e3779b97f4a7c15ull;
        return Rng(splitmix64(s));
    }

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n)
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    float normal_f(float mean = 0.0f, float stddev = 1.0f) {
        return mean + stddev * static_cast<float>(normal());
    }

    void fill_normal(std::span<float> out, float mean = 0.0f, float stddev = 1.0f) {
        for (float& v : out) v = normal_f(mean, stddev);
    }

    void fill_uniform(std::span<float> out, float lo, float hi) {
        for (float& v : out) v = static_cast<float>(uniform(lo, hi));
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mimic

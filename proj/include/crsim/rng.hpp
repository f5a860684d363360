#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace crsim::rng {

// Seed mixer (splitmix64). Used to derive decorrelated per-(group,
// realization, purpose) seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + splitmix64(b)));
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return mix(mix(a, b, c), d);
}

// mt19937_64 with hand-rolled real-valued draws. The engine's integer
// output sequence is pinned by the standard, and the transforms below are
// explicit, so draws are byte-identical across standard libraries (the
// std::*_distribution adapters are not).
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Inverse-CDF exponential; mean <= 0 degenerates to 0.
    double exponential(double mean) {
        if (mean <= 0.0) return 0.0;
        return -mean * std::log1p(-next_unit());
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_unit() * (hi - lo + 1));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace crsim::rng

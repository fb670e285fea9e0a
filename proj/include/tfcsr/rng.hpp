#pragma once

// Deterministic random streams.
//
// Generator: xoshiro256++ seeded from splitmix64. Both algorithms are fully
// specified here, so identical seeds give identical draws on every platform
// and standard library. None of the std:: distributions are used because
// their output is not pinned by the standard.
//
// Seeding scheme (documented so other implementations can reproduce the
// schedules and counters):
//   stream_seed(master, label) = splitmix64(master ^ fnv1a64(label))
//   substream(seed, k)         = splitmix64(seed ^ (k * 0x9e3779b97f4a7c15))
//   Rng state words            = splitmix64(seed), splitmix64(seed + g),
//                                splitmix64(seed + 2g), splitmix64(seed + 3g)
//                                with g = 0x9e3779b97f4a7c15
// All randomness flows through streams derived from one master seed with the
// labels "init", "shuffle", "buffer", "sampling" and "probe".

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace tfcsr {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Seed for one named stream of a run.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view label) {
    return splitmix64(master ^ fnv1a64(label));
}

// Further keying inside a stream (per task, per epoch, per trial...).
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t k) {
    return splitmix64(seed ^ (k * 0x9e3779b97f4a7c15ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            w = splitmix64(s);
            s += 0x9e3779b97f4a7c15ULL;
        }
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in [0, bound), rejection sampling to avoid modulo bias.
    std::uint64_t uniform_int(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("uniform_int: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller (cosine branch only).
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace tfcsr

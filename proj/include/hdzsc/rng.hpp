#pragma once

// Counter-based pseudo-random generation.
//
// Every random bit in this library is a pure function of (seed, stream tag,
// index, position), so any codebook entry or training draw can be regenerated
// in isolation, in any language, without replaying predecessors.
//
// The exact algorithm is fixed as follows and must not change between releases:
//
//   GAMMA  = 0x9e3779b97f4a7c15 (golden-ratio increment, as in SplitMix64)
//   fin(z) = SplitMix64 finalizer:
//              z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//              z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//              return z ^ (z >> 31)
//   key(seed, tag)        = fin(seed + FNV1a64(tag) * GAMMA)
//   word(key, index, pos) = fin(fin(key + (index+1) * GAMMA) + (pos+1) * GAMMA)
//
// FNV1a64 is the standard 64-bit FNV-1a hash over the tag bytes
// (offset basis 14695981039346656037, prime 1099511628211).
//
// `word` is the u64 at counter `pos` of logical stream (seed, tag, index).
// Uniform doubles take the top 53 bits; normals use Box-Muller on two
// consecutive counter positions.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hdzsc::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t fin(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr std::uint64_t key(std::uint64_t seed, std::string_view tag) {
    return fin(seed + fnv1a64(tag) * kGamma);
}

constexpr std::uint64_t word(std::uint64_t key, std::uint64_t index, std::uint64_t pos) {
    return fin(fin(key + (index + 1) * kGamma) + (pos + 1) * kGamma);
}

// Sequential view over one logical stream; still counter-based underneath,
// the instance only carries the next position.
class Stream {
public:
    Stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0)
        : key_(key(seed, tag)), index_(index) {}

    std::uint64_t next_u64() { return word(key_, index_, pos_++); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in {0, 1, ..., n-1} by rejection; unbiased for all n >= 1.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; consumes two counter positions.
    double next_normal() {
        // u1 in (0,1] so the log is finite.
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(next_below(i))]);
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t index_;
    std::uint64_t pos_ = 0;
};

}  // namespace hdzsc::rng

#pragma once

#include <cstdint>
#include <string_view>

// Deterministic, platform-independent randomness. std::uniform_int_distribution
// is implementation-defined, so all draws here go through our own mixing.

namespace syco {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_str64(std::string_view s) {
    // FNV-1a, then one mixing round.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

// Counter-based substream: a value in [0,1) that depends only on its inputs,
// never on draw order or thread schedule.
inline double substream_u01(std::uint64_t seed, std::string_view key, std::uint64_t counter) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(hash_str64(key) + counter));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) from the same substream family.
inline std::uint32_t substream_below(std::uint64_t seed, std::string_view key,
                                     std::uint64_t counter, std::uint32_t n) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(hash_str64(key) + counter) ^ 0xa5a5a5a5a5a5a5a5ULL);
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

// Minimal sequential engine for shuffles.
class Splitmix {
  public:
    explicit Splitmix(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }
    // Unbiased integer in [0, n) via rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

  private:
    std::uint64_t state_;
};

}  // namespace syco

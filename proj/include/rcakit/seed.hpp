#pragma once

#include <cstdint>
#include <initializer_list>

namespace rcakit {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Child seed for a path of indices below a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = master;
    std::uint64_t out = splitmix64(state);
    for (auto p : path) {
        state ^= p + 0x632BE59BD9B4E019ULL;
        out = splitmix64(state);
    }
    return out;
}

}  // namespace rcakit

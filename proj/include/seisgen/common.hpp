#pragma once

#include <cstdint>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace seisgen {

// Bad run configuration / CLI usage. Mapped to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent dataset content. Mapped to exit code 3.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure at run time (divergence, non-finite state). Exit code 4.
class runtime_failure : public std::runtime_error {
public:
    explicit runtime_failure(const std::string& msg) : std::runtime_error(msg) {}
};

inline void warn(const std::string& msg) {
    std::cerr << "[warn] " << msg << "\n";
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stateless seed derivation: the same (root, path...) always yields the same
// stream, independent of how many draws other components made. Training
// resumability relies on this.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a) {
    return splitmix64(root ^ splitmix64(a));
}
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(root, a), b);
}
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) {
    return derive_seed(derive_seed(root, a, b), c);
}
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    return derive_seed(root, fnv1a(tag));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace seisgen

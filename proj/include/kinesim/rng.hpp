#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kinesim {

using RngEngine = std::mt19937_64;

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

// Labeled stream derivation: every consumer of randomness owns a stream
// derived from (root seed, label[, index]). Adding a consumer with a new
// label never perturbs the draws seen by existing ones.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    return detail::splitmix64(root ^ detail::fnv1a64(label));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index) {
    return detail::splitmix64(derive_seed(root, label) ^ detail::splitmix64(index));
}

inline RngEngine derive_stream(std::uint64_t root, std::string_view label) {
    return RngEngine(derive_seed(root, label));
}

inline RngEngine derive_stream(std::uint64_t root, std::string_view label, std::uint64_t index) {
    return RngEngine(derive_seed(root, label, index));
}

} // namespace kinesim

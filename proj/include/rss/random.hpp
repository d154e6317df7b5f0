#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rss {

using Rng = std::mt19937_64;

// Seed derivations. Every random stream in the project comes from
// derive_seed(root, stream ids...) so that results do not depend on the
// order in which streams are consumed.
namespace stream {
inline constexpr std::uint64_t kCenter = 1;
inline constexpr std::uint64_t kDraw = 2;
inline constexpr std::uint64_t kPermutation = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kCluster = 5;
inline constexpr std::uint64_t kRandomSupport = 6;
}  // namespace stream

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = splitmix64(root);
    for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> ids) {
    return Rng(derive_seed(root, ids));
}

}  // namespace rss

#pragma once

// Named, index-addressed random substreams.
//
// Every random draw in the library comes from an engine seeded by hashing
// (top-level seed, stream tag, work-item indices). Work items can therefore be
// executed in any order, on any number of threads, and still see identical
// random numbers.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace eoq {

using Engine = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Seed value for the substream (seed, tag, indices...).
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag,
                                    std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = detail::splitmix64(seed ^ detail::splitmix64(detail::hash_tag(tag)));
    for (std::uint64_t i : indices) {
        h = detail::splitmix64(h ^ detail::splitmix64(i + 0x632be59bd9b4e019ULL));
    }
    return h;
}

inline Engine substream(std::uint64_t seed, std::string_view tag,
                        std::initializer_list<std::uint64_t> indices = {}) {
    std::seed_seq seq{static_cast<std::uint32_t>(substream_seed(seed, tag, indices)),
                      static_cast<std::uint32_t>(substream_seed(seed, tag, indices) >> 32)};
    return Engine(seq);
}

}  // namespace eoq

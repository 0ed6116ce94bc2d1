#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace popdcop::sim {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream seed as a pure function of (run seed, agent, label, sub-index), so no stream
/// depends on the order in which agents are stepped.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::int64_t agent, std::string_view label,
                                    std::uint64_t sub = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(agent));
  h = splitmix64(h ^ fnv1a(label));
  return splitmix64(h ^ sub);
}

inline Rng make_stream(std::uint64_t seed, std::int64_t agent, std::string_view label, std::uint64_t sub = 0) {
  return Rng(stream_seed(seed, agent, label, sub));
}

}  // namespace popdcop::sim

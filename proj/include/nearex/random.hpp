#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

namespace nearex {

// Recorded in experiment metadata.
inline constexpr std::string_view kGeneratorName = "mt19937_64/splitmix64-substreams";

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

using Engine = std::mt19937_64;

// Independent generator for substream `stream` of `seed`. Workers and blocks
// draw from (seed, index) substreams so results do not depend on how work is
// partitioned.
inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t state = seed ^ detail::splitmix64(stream);
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    const std::uint64_t v = detail::splitmix64(state);
    words[i] = static_cast<std::uint32_t>(v);
    words[i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

// Uniform on the open interval (0, 1).
inline double open_unit(Engine& engine) {
  constexpr double kScale = 0x1.0p-53;
  return (static_cast<double>(engine() >> 11) + 0.5) * kScale;
}

}  // namespace nearex

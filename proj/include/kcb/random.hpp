#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace kcb {

using Rng = std::mt19937_64;

/// Purposes for derived random streams. Every draw in a simulation comes
/// from a stream keyed by (master seed, purpose, trial, agent, round), so a
/// draw never depends on how many draws other components made.
enum class Purpose : std::uint64_t {
  graph = 1,
  ground_truth = 2,
  network_contexts = 3,
  decision_set = 4,
  noise = 5,
  explore = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(master);
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master, Purpose purpose, std::uint64_t trial, std::uint64_t agent,
                       std::uint64_t round) {
  return Rng(derive_seed(master, {static_cast<std::uint64_t>(purpose), trial, agent, round}));
}

}  // namespace kcb

#ifndef VERIRL_RNG_HPP_
#define VERIRL_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace verirl {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent substream seed for a tuple of coordinates, e.g.
// (seed, step, prompt index, member index).
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  return h;
}

using Engine = std::mt19937_64;

// [0, 1) with 53 random bits; identical on every standard library.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Engine& eng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(eng) * static_cast<double>(n));
}

template <class T>
void fisher_yates(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(eng, i)]);
  }
}

}  // namespace verirl

#endif  // VERIRL_RNG_HPP_

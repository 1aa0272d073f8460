#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace rsv {

namespace detail {

/// Unbiased draw in [0, bound) by rejection; portable unlike std::uniform_int_distribution.
inline std::uint64_t draw_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % bound));
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

/// Uniform real in [0,1) from the top 53 bits.
inline double draw_unit(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

template <class T>
void shuffle_with(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(draw_below(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

template <class T>
void stable_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  detail::shuffle_with(v, gen);
}

}  // namespace rsv
